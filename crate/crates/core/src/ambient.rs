//! The static warped product `ḡ = h + φ² dt²` over an end `(E, h)`.
//!
//! Ambient coordinates are `(x_1, …, x_n, t)`; index `n` is the time slot.

use crate::error::{Error, Result};
use crate::fieldexpr::{Jet2, ScalarField};
use crate::geometry::{christoffel, curvature, CurvatureData, MetricField, MetricJet, MetricSource};

/// Deliberate corruptions used by negative-control tests.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Perturbation {
    #[default]
    None,
    /// The ambient metric sees `∇φ` multiplied by this factor while the
    /// frame `e₀ = φ⁻¹∂_t` keeps the true derivatives.
    ScalePhiGradient(f64),
    /// `ḡ_tt = φ²(1 + ε t)`, which breaks the Killing property of `∂_t`.
    TimeDependence(f64),
}

#[derive(Clone, Debug)]
pub struct WarpedAmbient {
    base: MetricField,
    phi: ScalarField,
    product: bool,
    perturbation: Perturbation,
}

impl WarpedAmbient {
    pub fn new(base: MetricField, phi: ScalarField) -> Result<Self> {
        if phi.dim() != base.dim() {
            return Err(Error::InvalidInput(format!(
                "warping function has dimension {} but the base has dimension {}",
                phi.dim(),
                base.dim()
            )));
        }
        let product = phi.as_constant() == Some(1.0);
        Ok(Self {
            base,
            phi,
            product,
            perturbation: Perturbation::None,
        })
    }

    /// The Riemannian product `h + dt²`.
    pub fn product(base: MetricField) -> Self {
        let phi = ScalarField::constant(base.dim(), 1.0);
        Self {
            base,
            phi,
            product: true,
            perturbation: Perturbation::None,
        }
    }

    pub fn with_perturbation(mut self, perturbation: Perturbation) -> Self {
        self.perturbation = perturbation;
        self
    }

    /// Dimension of the base `E`; the ambient has one more.
    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn base(&self) -> &MetricField {
        &self.base
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn is_product(&self) -> bool {
        self.product
    }

    pub fn perturbation(&self) -> Perturbation {
        self.perturbation
    }

    /// Warping function jet, checked positive.
    pub fn phi_jet(&self, x: &[f64]) -> Result<Jet2> {
        let jet = self.phi.eval_jet2(x)?;
        if !(jet.value() > 0.0) {
            return Err(Error::InvalidInput(format!(
                "warping function is not positive at {x:?}: {}",
                jet.value()
            )));
        }
        Ok(jet)
    }

    pub fn base_jet(&self, x: &[f64]) -> Result<MetricJet> {
        self.base.jet(x)
    }

    /// Ambient metric jet at `(x, 0)`.
    pub fn metric_jet(&self, x: &[f64]) -> Result<MetricJet> {
        self.metric_jet_at(x, 0.0)
    }

    /// Ambient metric jet at `(x, t)`.
    pub fn metric_jet_at(&self, x: &[f64], t: f64) -> Result<MetricJet> {
        let base = self.base.jet(x)?;
        let phi = self.phi_jet(x)?;
        self.assemble(&base, &phi, x, t)
    }

    pub(crate) fn assemble(&self, base: &MetricJet, phi: &Jet2, x: &[f64], t: f64) -> Result<MetricJet> {
        let n = self.dim();
        let mut point = x.to_vec();
        point.push(t);
        let mut jet = MetricJet::zeros(n + 1, &point);
        for i in 0..n {
            for j in 0..=i {
                jet.set_g(i, j, base.g(i, j));
                for k in 0..n {
                    jet.set_dg(i, j, k, base.dg(i, j, k));
                    for l in 0..=k {
                        jet.set_d2g(i, j, k, l, base.d2g(i, j, k, l));
                    }
                }
            }
        }
        let phi = match self.perturbation {
            Perturbation::ScalePhiGradient(s) => phi.with_scaled_gradient(s),
            _ => *phi,
        };
        let phi2 = phi.mul(&phi);
        match self.perturbation {
            Perturbation::TimeDependence(eps) => {
                let c = 1.0 + eps * t;
                jet.set_g(n, n, phi2.value() * c);
                for k in 0..n {
                    jet.set_dg(n, n, k, phi2.d(k) * c);
                    jet.set_d2g(n, n, k, n, phi2.d(k) * eps);
                    for l in 0..=k {
                        jet.set_d2g(n, n, k, l, phi2.hess(k, l) * c);
                    }
                }
                jet.set_dg(n, n, n, phi2.value() * eps);
            }
            _ => jet.set_from_jet(n, n, &phi2),
        }
        jet.inverse()?;
        Ok(jet)
    }

    /// Ambient Ricci tensor (row-major, `(n+1)²` entries) and scalar curvature.
    pub fn ricci(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let c = curvature(&self.metric_jet(x)?)?;
        Ok((c.ricci, c.scalar))
    }

    pub fn point_data(&self, x: &[f64], t: f64) -> Result<AmbientPointData> {
        let jet = self.metric_jet_at(x, t)?;
        let curv = curvature(&jet)?;
        let n = self.dim();
        let mut e0 = vec![0.0; n + 1];
        e0[n] = 1.0 / jet.g(n, n).sqrt();
        Ok(AmbientPointData { jet, curvature: curv, e0 })
    }

    /// Max ḡ-norm of the three structure-equation residuals
    /// `∇̄_{∂_i} e₀`, `∇̄_{e₀} ∂_i − φ⁻¹φ_i e₀`, `∇̄_{e₀} e₀ + φ⁻¹∇φ`.
    pub fn structure_residuals(&self, x: &[f64]) -> Result<StructureResiduals> {
        let n = self.dim();
        let d = n + 1;
        let jet = self.metric_jet(x)?;
        let (ginv, _) = jet.inverse()?;
        let gamma = christoffel(&jet, &ginv);
        let gam = |k: usize, i: usize, j: usize| gamma[(k * d + i) * d + j];
        let phi = self.phi_jet(x)?;
        let p = phi.value();
        let hinv = self.base.jet(x)?.inverse()?.0;
        let norm = |v: &[f64]| {
            let mut s = 0.0;
            for a in 0..d {
                for b in 0..d {
                    s += jet.g(a, b) * v[a] * v[b];
                }
            }
            s.abs().sqrt()
        };

        let mut horizontal = 0.0f64;
        let mut vertical = 0.0f64;
        for i in 0..n {
            // ∇̄_{∂_i}(φ⁻¹∂_t) = ∂_i(φ⁻¹)∂_t + φ⁻¹Γ̄^a_{i t}∂_a
            let mut v: Vec<f64> = (0..d).map(|a| gam(a, i, n) / p).collect();
            v[n] -= phi.d(i) / (p * p);
            horizontal = horizontal.max(norm(&v));
            // ∇̄_{e₀}∂_i − φ⁻¹φ_i e₀ = φ⁻¹Γ̄^a_{t i}∂_a − φ_i φ⁻² ∂_t
            let mut w: Vec<f64> = (0..d).map(|a| gam(a, n, i) / p).collect();
            w[n] -= phi.d(i) / (p * p);
            vertical = vertical.max(norm(&w));
        }
        // ∇̄_{e₀}e₀ + φ⁻¹∇φ = φ⁻²Γ̄^a_{tt}∂_a + φ⁻¹h^{ij}φ_j ∂_i
        let mut u: Vec<f64> = (0..d).map(|a| gam(a, n, n) / (p * p)).collect();
        for i in 0..n {
            for j in 0..n {
                u[i] += hinv[i * n + j] * phi.d(j) / p;
            }
        }
        let normal = norm(&u);
        Ok(StructureResiduals {
            horizontal,
            vertical,
            normal,
        })
    }

    /// `max |∇_α X_β + ∇_β X_α|` for `X = ∂_t`, from the lowered connection.
    pub fn killing_residual(&self, x: &[f64]) -> Result<f64> {
        let n = self.dim();
        let d = n + 1;
        let jet = self.metric_jet(x)?;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                // X_β = ḡ_{βt}; Γ_{t a b} = ½(∂_a ḡ_{tb} + ∂_b ḡ_{ta} − ∂_t ḡ_{ab})
                let lowered = 0.5 * (jet.dg(n, b, a) + jet.dg(n, a, b) - jet.dg(a, b, n));
                let v = jet.dg(b, n, a) + jet.dg(a, n, b) - 2.0 * lowered;
                worst = worst.max(v.abs());
            }
        }
        Ok(worst)
    }

    /// Max of the second fundamental form `⟨∇̄_{∂_i}∂_j, e₀⟩` of the slice through `x`.
    pub fn slice_second_fundamental_form(&self, x: &[f64]) -> Result<f64> {
        let n = self.dim();
        let d = n + 1;
        let jet = self.metric_jet(x)?;
        let (ginv, _) = jet.inverse()?;
        let gamma = christoffel(&jet, &ginv);
        let phi = jet.g(n, n).sqrt();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((phi * gamma[(n * d + i) * d + j]).abs());
            }
        }
        Ok(worst)
    }

    /// Soft check that `|φ − 1|` and `|∇φ|_h` decrease along sample rays
    /// beyond `threshold`.
    pub fn decay_diagnostic(&self, threshold: f64) -> Result<DecayDiagnostic> {
        let n = self.dim();
        let mut warnings = Vec::new();
        for ray in sample_rays(n) {
            let mut last: Option<(f64, f64)> = None;
            for k in 0..6 {
                let s = threshold * 2f64.powi(k);
                let x: Vec<f64> = ray.iter().map(|w| w * s).collect();
                let phi = self.phi_jet(&x)?;
                let hinv = self.base.jet(&x)?.inverse()?.0;
                let mut grad2 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        grad2 += hinv[i * n + j] * phi.d(i) * phi.d(j);
                    }
                }
                let now = ((phi.value() - 1.0).abs(), grad2.sqrt());
                if let Some(prev) = last {
                    if now.0 > prev.0 || now.1 > prev.1 {
                        warnings.push(format!("warping function does not decay along {ray:?} at s = {s}"));
                        break;
                    }
                }
                last = Some(now);
            }
        }
        Ok(DecayDiagnostic { warnings })
    }
}

/// Coordinate axes, their negatives and one diagonal, all unit length.
pub(crate) fn sample_rays(n: usize) -> Vec<Vec<f64>> {
    let mut rays = Vec::new();
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; n];
            v[i] = sign;
            rays.push(v);
        }
    }
    rays.push(vec![1.0 / (n as f64).sqrt(); n]);
    rays
}

#[derive(Clone, Debug)]
pub struct AmbientPointData {
    pub jet: MetricJet,
    pub curvature: CurvatureData,
    /// `e₀ = φ⁻¹ ∂_t` in ambient coordinates.
    pub e0: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureResiduals {
    pub horizontal: f64,
    pub vertical: f64,
    pub normal: f64,
}

impl StructureResiduals {
    pub fn max(&self) -> f64 {
        self.horizontal.max(self.vertical).max(self.normal)
    }
}

#[derive(Clone, Debug, Default)]
pub struct DecayDiagnostic {
    pub warnings: Vec<String>,
}

impl DecayDiagnostic {
    pub fn ok(&self) -> bool {
        self.warnings.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn field(src: &str, n: usize) -> ScalarField {
        ScalarField::parse(src, n, &BTreeMap::new()).unwrap()
    }

    fn warped() -> WarpedAmbient {
        let base = MetricField::conformal(field("(1 + 1/(2*r))^4", 3), 1.0).unwrap();
        WarpedAmbient::new(base, field("1 + 1/r + 0.1*x1/r^3", 3)).unwrap()
    }

    #[test]
    fn flat_product_is_euclidean() {
        let amb = WarpedAmbient::product(MetricField::flat(3));
        let jet = amb.metric_jet(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(jet, MetricJet::flat(4, &[1.0, -2.0, 0.5, 0.0]));
        let (ric, s) = amb.ricci(&[1.0, -2.0, 0.5]).unwrap();
        assert!(ric.iter().all(|v| *v == 0.0));
        assert_eq!(s, 0.0);
        assert_eq!(amb.killing_residual(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn warped_time_coefficient() {
        let amb = WarpedAmbient::new(MetricField::flat(3), field("1 + 1/r", 3)).unwrap();
        let jet = amb.metric_jet(&[2.0, 0.0, 0.0]).unwrap();
        assert_eq!(jet.g(3, 3), 2.25);
        let step = 1e-5;
        let phi2 = |x: [f64; 3]| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            (1.0 + 1.0 / r).powi(2)
        };
        let fd = (phi2([2.0 + step, 0.0, 0.0]) - phi2([2.0 - step, 0.0, 0.0])) / (2.0 * step);
        assert!((jet.dg(3, 3, 0) - fd).abs() <= 1e-8 * fd.abs());
        assert!(jet.dg(3, 3, 3) == 0.0);
    }

    #[test]
    fn product_ricci_reduces_to_base() {
        let base = MetricField::conformal(field("exp(0.3*x1*x2) + 1/r", 3), 1.0).unwrap();
        let amb = WarpedAmbient::product(base.clone());
        let x = [0.4, 1.1, -0.7];
        let (ric, s) = amb.ricci(&x).unwrap();
        let cb = curvature(&base.jet(&x).unwrap()).unwrap();
        assert!((s - cb.scalar).abs() <= 1e-9 * cb.scalar.abs().max(1.0));
        for a in 0..4 {
            assert!(ric[3 * 4 + a].abs() <= 1e-9);
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((ric[i * 4 + j] - cb.ricci(i, j)).abs() <= 1e-9);
            }
        }
    }

    // Independent oracle: Ric(∂_i,∂_j) = Ric_h − φ⁻¹ Hess_h φ, Ric(∂_t,∂_t) = −φ Δ_h φ.
    #[test]
    fn warped_ricci_matches_closed_form() {
        let amb = warped();
        for x in [[1.3, -0.4, 0.9], [2.0, 2.0, -1.0], [-0.6, 0.2, 3.1]] {
            let (ric, _) = amb.ricci(&x).unwrap();
            let hjet = amb.base().jet(&x).unwrap();
            let ch = curvature(&hjet).unwrap();
            let phi = amb.phi().eval_jet2(&x).unwrap();
            let mut hess = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    hess[i][j] = phi.hess(i, j);
                    for k in 0..3 {
                        hess[i][j] -= ch.gamma(k, i, j) * phi.d(k);
                    }
                }
            }
            let mut lap = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let expected = ch.ricci(i, j) - hess[i][j] / phi.value();
                    assert!((ric[i * 4 + j] - expected).abs() <= 1e-7, "{i}{j}");
                    lap += ch.ginv[i * 3 + j] * hess[i][j];
                }
            }
            assert!((ric[15] + phi.value() * lap).abs() <= 1e-7);
        }
    }

    #[test]
    fn structure_equations_hold() {
        let amb = warped();
        for x in [[1.3, -0.4, 0.9], [2.0, 2.0, -1.0]] {
            assert!(amb.structure_residuals(&x).unwrap().max() <= 1e-12);
            assert!(amb.killing_residual(&x).unwrap() <= 1e-12);
            assert!(amb.slice_second_fundamental_form(&x).unwrap() <= 1e-12);
        }
        let prod = WarpedAmbient::product(MetricField::flat(3));
        assert_eq!(prod.structure_residuals(&[1.0, 0.0, 0.0]).unwrap().normal, 0.0);
    }

    #[test]
    fn corruptions_are_detected() {
        let x = [1.3, -0.4, 0.9];
        let bad = warped().with_perturbation(Perturbation::ScalePhiGradient(2.0));
        assert!(bad.structure_residuals(&x).unwrap().max() > 1e-3);
        let bad = warped().with_perturbation(Perturbation::TimeDependence(0.01));
        assert!(bad.killing_residual(&x).unwrap() > 1e-3);
    }

    #[test]
    fn point_data_does_not_depend_on_time() {
        let amb = warped();
        let x = [0.3, 1.2, -2.0];
        let a = amb.point_data(&x, 0.0).unwrap();
        let b = amb.point_data(&x, 7.0).unwrap();
        assert_eq!(a.curvature.ricci, b.curvature.ricci);
        assert_eq!(a.jet.metric_matrix(), b.jet.metric_matrix());
        let len2 = a.jet.g(3, 3) * a.e0[3] * a.e0[3];
        assert!((len2 - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn decay_diagnostic_flags_growth() {
        assert!(warped().decay_diagnostic(4.0).unwrap().ok());
        let grow = WarpedAmbient::new(MetricField::flat(3), field("1 + 0.01*r", 3)).unwrap();
        assert!(!grow.decay_diagnostic(4.0).unwrap().ok());
    }
}

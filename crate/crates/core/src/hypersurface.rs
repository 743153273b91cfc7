//! Extrinsic geometry of a vertical graph `{(x, f(x))}` in a warped ambient.
//!
//! Components are taken in the graph frame `Z_i = ∂_i + f_i ∂_t`; ambient
//! vectors use the coordinate basis `(∂_x, ∂_t)`. Indices of `f_i`, `φ_i` are
//! raised with `h`.

use crate::ambient::{sample_rays, WarpedAmbient};
use crate::error::{Error, Result};
use crate::fieldexpr::{Jet2, ScalarField};
use crate::geometry::{curvature, spd_inverse, sphere_geometry, MetricJet, MetricSource};

/// Inner boundary `Γ = {|x| = radius}`, lying in the slice `t = f(radius)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerBoundary {
    pub radius: f64,
    /// The graph meets the slice orthogonally (`|∇f| → ∞`, a horizon).
    pub orthogonal: bool,
    /// Relative offset from `radius` where graph quantities are evaluated
    /// when `orthogonal` is set.
    pub epsilon: f64,
}

impl InnerBoundary {
    pub fn horizon(radius: f64) -> Self {
        Self {
            radius,
            orthogonal: true,
            epsilon: 1e-3,
        }
    }

    pub fn excised(radius: f64) -> Self {
        Self {
            radius,
            orthogonal: false,
            epsilon: 0.0,
        }
    }

    /// Smallest radius at which the graph jet may be evaluated.
    pub fn evaluation_radius(&self) -> f64 {
        if self.orthogonal {
            self.radius * (1.0 + self.epsilon)
        } else {
            self.radius
        }
    }
}

#[derive(Clone, Debug)]
pub struct GraphSpec {
    pub ambient: WarpedAmbient,
    pub f: ScalarField,
    pub tau: f64,
    pub boundary: Option<InnerBoundary>,
}

impl GraphSpec {
    pub fn new(ambient: WarpedAmbient, f: ScalarField, tau: f64) -> Result<Self> {
        let n = ambient.dim();
        if f.dim() != n {
            return Err(Error::InvalidInput(format!(
                "graph function has dimension {} but the ambient base has dimension {n}",
                f.dim()
            )));
        }
        if !(tau > (n as f64 - 2.0) / 2.0) {
            return Err(Error::InvalidInput(format!(
                "decay exponent {tau} must exceed (n-2)/2 = {}",
                (n as f64 - 2.0) / 2.0
            )));
        }
        Ok(Self {
            ambient,
            f,
            tau,
            boundary: None,
        })
    }

    pub fn with_boundary(mut self, boundary: InnerBoundary) -> Result<Self> {
        if !(boundary.radius > 0.0) || !(boundary.epsilon >= 0.0) {
            return Err(Error::InvalidInput(format!("invalid inner boundary {boundary:?}")));
        }
        self.boundary = Some(boundary);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    /// Smallest admissible `|x|` (zero without a boundary).
    pub fn min_radius(&self) -> f64 {
        self.boundary.as_ref().map_or(0.0, InnerBoundary::evaluation_radius)
    }

    /// True when `f` is structurally constant.
    pub fn is_flat_graph(&self) -> bool {
        self.f.as_constant().is_some()
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "point of dimension {} for a graph over an {}-dimensional base",
                x.len(),
                self.dim()
            )));
        }
        let r = norm(x);
        let min = self.min_radius();
        if min > 0.0 && r < min * (1.0 - 1e-12) {
            return Err(Error::InvalidInput(format!(
                "point at radius {r} lies inside the admissible radius {min}"
            )));
        }
        Ok(())
    }

    /// Soft check that `|φ df|_h` decreases along sample rays beyond `threshold`.
    pub fn decay_diagnostic(&self, threshold: f64) -> Result<Vec<String>> {
        let n = self.dim();
        let mut warnings = Vec::new();
        for ray in sample_rays(n) {
            let mut last = f64::INFINITY;
            for k in 0..6 {
                let s = threshold * 2f64.powi(k);
                let x: Vec<f64> = ray.iter().map(|w| w * s).collect();
                let fj = self.f.eval_jet2(&x)?;
                let phi = self.ambient.phi_jet(&x)?.value();
                let hinv = self.ambient.base_jet(&x)?.inverse()?.0;
                let mut grad2 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        grad2 += hinv[i * n + j] * fj.d(i) * fj.d(j);
                    }
                }
                let now = phi * grad2.sqrt();
                if now > last * (1.0 + 1e-12) && now > 1e-14 {
                    warnings.push(format!("|phi df| does not decay along {ray:?} at s = {s}"));
                    break;
                }
                last = now;
            }
        }
        Ok(warnings)
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Every extrinsic quantity of the graph at one chart point.
#[derive(Clone, Debug)]
pub struct GraphJet {
    pub point: Vec<f64>,
    pub f: Jet2,
    pub phi: Jet2,
    pub h: MetricJet,
    pub hinv: Vec<f64>,
    pub det_h: f64,
    /// `f^i = h^{ij} f_j`.
    pub f_up: Vec<f64>,
    pub g: Vec<f64>,
    pub ginv: Vec<f64>,
    pub w: f64,
    /// Unit normal in ambient coordinates, `n + 1` components.
    pub normal: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `B^i_j` at `[i * n + j]`.
    pub shape: Vec<f64>,
    pub s1: f64,
    pub s2: f64,
    pub newton: Vec<f64>,
    pub xt: Vec<f64>,
    pub gxt: Vec<f64>,
    pub gxt1: Vec<f64>,
    pub gxt2: Vec<f64>,
    pub theta: f64,
    pub ambient_ricci: Vec<f64>,
    pub ambient_scalar: f64,
    pub base_ricci: Vec<f64>,
    pub base_scalar: f64,
    /// `R_g` from the Gauss equation.
    pub r_g: f64,
}

impl GraphJet {
    pub fn dim(&self) -> usize {
        self.point.len()
    }

    /// `√det g = W √det h`.
    pub fn sqrt_det_g(&self) -> f64 {
        self.w * self.det_h.sqrt()
    }

    /// `Xᵀ` as an ambient vector.
    pub fn xt_ambient(&self) -> Vec<f64> {
        let n = self.dim();
        let mut v = self.xt.clone();
        v.push((0..n).map(|i| self.f.d(i) * self.xt[i]).sum());
        v
    }

    pub fn ambient_ricci_apply(&self, u: &[f64], v: &[f64]) -> f64 {
        let d = self.dim() + 1;
        let mut s = 0.0;
        for a in 0..d {
            for b in 0..d {
                s += self.ambient_ricci[a * d + b] * u[a] * v[b];
            }
        }
        s
    }

    /// `2 S₂ Θ + Ric_ḡ(N, Xᵀ)`.
    pub fn flux_rhs(&self) -> f64 {
        2.0 * self.s2 * self.theta + self.ambient_ricci_apply(&self.normal, &self.xt_ambient())
    }

    /// `Θ (R_g − R_h + Ric_h(Nᵗ, Nᵗ))`, the product-case form of [`Self::flux_rhs`].
    pub fn product_rhs(&self) -> f64 {
        let n = self.dim();
        let mut ric_nn = 0.0;
        for i in 0..n {
            for j in 0..n {
                ric_nn += self.base_ricci[i * n + j] * self.normal[i] * self.normal[j];
            }
        }
        self.theta * (self.r_g - self.base_scalar + ric_nn)
    }

    /// `Θ R_g`, the Ricci-flat form of [`Self::flux_rhs`].
    pub fn ricci_flat_rhs(&self) -> f64 {
        self.theta * self.r_g
    }

    pub fn raise_h(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.hinv[i * n + j] * v[j]).sum())
            .collect()
    }
}

/// Evaluates the full extrinsic pipeline at `x`.
pub fn graph_jet(spec: &GraphSpec, x: &[f64]) -> Result<GraphJet> {
    spec.check_domain(x)?;
    let n = spec.dim();
    let amb = &spec.ambient;
    let h = amb.base_jet(x)?;
    let hc = curvature(&h)?;
    let hinv = hc.ginv.clone();
    let det_h = hc.det;
    let phi = amb.phi_jet(x)?;
    let fj = spec.f.eval_jet2(x)?;
    let p = phi.value();

    let raise = |v: &dyn Fn(usize) -> f64| -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| hinv[i * n + j] * v(j)).sum())
            .collect()
    };
    let f_up = raise(&|j| fj.d(j));
    let grad2: f64 = (0..n).map(|i| fj.d(i) * f_up[i]).sum();
    let phi_f: f64 = (0..n).map(|i| phi.d(i) * f_up[i]).sum();
    let w = (1.0 + p * p * grad2).sqrt();

    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = h.g(i, j) + p * p * fj.d(i) * fj.d(j);
        }
    }
    let (ginv, _) = spd_inverse(&g, n)
        .ok_or_else(|| Error::NotPositiveDefinite(format!("induced metric at {x:?}")))?;

    // Covariant Hessian of f in h; the coordinate Hessian only agrees with it
    // in normal coordinates.
    let mut hess = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            let mut v = fj.hess(j, k);
            for m in 0..n {
                v -= hc.gamma(m, j, k) * fj.d(m);
            }
            hess[j * n + k] = v;
        }
    }
    // A_jk = φ∇²f + φ_j f_k + φ_k f_j; α = (A + φ² f_j f_k φ^m f_m) / W
    let mut a1 = vec![0.0; n * n];
    let mut alpha = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            let a = p * hess[j * n + k] + phi.d(j) * fj.d(k) + phi.d(k) * fj.d(j);
            a1[j * n + k] = a;
            alpha[j * n + k] = (a + p * p * fj.d(j) * fj.d(k) * phi_f) / w;
        }
    }
    let mut shape = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            shape[i * n + j] = (0..n).map(|k| ginv[i * n + k] * alpha[k * n + j]).sum();
        }
    }
    let s1: f64 = (0..n).map(|i| shape[i * n + i]).sum();
    let mut tr_b2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            tr_b2 += shape[i * n + j] * shape[j * n + i];
        }
    }
    let s2 = 0.5 * (s1 * s1 - tr_b2);
    let mut newton = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            newton[i * n + j] = if i == j { s1 } else { 0.0 } - shape[i * n + j];
        }
    }

    let mut normal: Vec<f64> = f_up.iter().map(|v| -p * v / w).collect();
    normal.push(1.0 / (p * w));
    let xt: Vec<f64> = f_up.iter().map(|v| p * p * v / (w * w)).collect();
    let theta = p / w;
    let gxt = contract_newton(&shape, s1, &xt);

    let w3 = w * w * w;
    let mut gxt1 = vec![0.0; n];
    let mut gxt2 = vec![0.0; n];
    for (i, (o1, o2)) in gxt1.iter_mut().zip(gxt2.iter_mut()).enumerate() {
        let mut s_1 = 0.0;
        let mut s_2 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let bracket = hinv[j * n + k] * f_up[i] - hinv[i * n + k] * f_up[j];
                s_1 += a1[k * n + j] * bracket;
                s_2 += fj.d(k) * fj.d(j) * bracket;
            }
        }
        *o1 = p * p / w3 * s_1;
        *o2 = p.powi(4) / w3 * phi_f * s_2;
    }

    let amb_jet = amb.assemble(&h, &phi, x, 0.0)?;
    let ac = curvature(&amb_jet)?;
    let d = n + 1;
    let mut ric_nn = 0.0;
    for a in 0..d {
        for b in 0..d {
            ric_nn += ac.ricci[a * d + b] * normal[a] * normal[b];
        }
    }
    let r_g = ac.scalar - 2.0 * ric_nn + 2.0 * s2;

    Ok(GraphJet {
        point: x.to_vec(),
        f: fj,
        phi,
        h,
        hinv,
        det_h,
        f_up,
        g,
        ginv,
        w,
        normal,
        alpha,
        shape,
        s1,
        s2,
        newton,
        xt,
        gxt,
        gxt1,
        gxt2,
        theta,
        ambient_ricci: ac.ricci,
        ambient_scalar: ac.scalar,
        base_ricci: hc.ricci,
        base_scalar: hc.scalar,
        r_g,
    })
}

/// `(GXᵀ)^i = B^j_j (Xᵀ)^i − B^i_j (Xᵀ)^j`.
fn contract_newton(shape: &[f64], s1: f64, xt: &[f64]) -> Vec<f64> {
    let n = xt.len();
    (0..n)
        .map(|i| s1 * xt[i] - (0..n).map(|j| shape[i * n + j] * xt[j]).sum::<f64>())
        .collect()
}

fn newton_residual_of(jet: &GraphJet, full: &[f64]) -> f64 {
    let scale = norm(full).max(1.0);
    (0..jet.dim())
        .map(|i| (full[i] - (jet.gxt1[i] + jet.gxt2[i])).abs())
        .fold(0.0, f64::max)
        / scale
}

/// `max_i |GXᵀ − (GXᵀ_(1) + GXᵀ_(2))| / max(1, |GXᵀ|)`.
pub fn newton_contraction_residual(spec: &GraphSpec, x: &[f64]) -> Result<f64> {
    let jet = graph_jet(spec, x)?;
    Ok(newton_residual_of(&jet, &jet.gxt))
}

/// Same residual with `B^1_1` shifted by `delta` before contracting.
pub fn newton_contraction_residual_perturbed(spec: &GraphSpec, x: &[f64], delta: f64) -> Result<f64> {
    let jet = graph_jet(spec, x)?;
    let mut shape = jet.shape.clone();
    shape[0] += delta;
    let s1 = jet.s1 + delta;
    let full = contract_newton(&shape, s1, &jet.xt);
    Ok(newton_residual_of(&jet, &full))
}

/// The induced metric `g = h + φ² df ⊗ df` as a metric source.
///
/// First derivatives are exact. Second derivatives need `∂³f`, which is
/// taken from Richardson-extrapolated central differences of exact Hessians.
#[derive(Clone, Debug)]
pub struct InducedMetric {
    spec: GraphSpec,
}

impl InducedMetric {
    pub fn new(spec: &GraphSpec) -> Self {
        Self { spec: spec.clone() }
    }

    fn parts(&self, x: &[f64]) -> Result<(MetricJet, Jet2, Jet2)> {
        let h = self.spec.ambient.base_jet(x)?;
        let phi = self.spec.ambient.phi_jet(x)?;
        let f = self.spec.f.eval_jet2(x)?;
        Ok((h, phi, f))
    }

    fn first(&self, x: &[f64]) -> Result<(MetricJet, MetricJet, Jet2, Jet2)> {
        let n = self.spec.dim();
        let (h, phi, f) = self.parts(x)?;
        let p2 = phi.mul(&phi);
        let mut jet = MetricJet::zeros(n, x);
        for i in 0..n {
            for j in 0..=i {
                jet.set_g(i, j, h.g(i, j) + p2.value() * f.d(i) * f.d(j));
                for k in 0..n {
                    let v = h.dg(i, j, k)
                        + p2.d(k) * f.d(i) * f.d(j)
                        + p2.value() * (f.hess(i, k) * f.d(j) + f.d(i) * f.hess(j, k));
                    jet.set_dg(i, j, k, v);
                }
            }
        }
        Ok((jet, h, p2, f))
    }

    /// `∂_a ∂_b ∂_c f`, symmetrized.
    fn third_derivatives(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.spec.dim();
        let step = 1e-3 * norm(x).max(1.0);
        let hess_at = |y: &[f64]| -> Result<Vec<f64>> {
            let j = self.spec.f.eval_jet2(y)?;
            Ok((0..n * n).map(|a| j.hess(a / n, a % n)).collect())
        };
        let mut raw = vec![0.0; n * n * n];
        for c in 0..n {
            let diff = |s: f64| -> Result<Vec<f64>> {
                let mut yp = x.to_vec();
                let mut ym = x.to_vec();
                yp[c] += s;
                ym[c] -= s;
                let (hp, hm) = (hess_at(&yp)?, hess_at(&ym)?);
                Ok((0..n * n).map(|a| (hp[a] - hm[a]) / (2.0 * s)).collect())
            };
            let coarse = diff(step)?;
            let fine = diff(0.5 * step)?;
            for a in 0..n * n {
                raw[a * n + c] = (4.0 * fine[a] - coarse[a]) / 3.0;
            }
        }
        let at = |a: usize, b: usize, c: usize| raw[(a * n + b) * n + c];
        let mut sym = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    sym[(a * n + b) * n + c] =
                        (at(a, b, c) + at(b, c, a) + at(c, a, b) + at(a, c, b) + at(b, a, c) + at(c, b, a)) / 6.0;
                }
            }
        }
        Ok(sym)
    }
}

impl MetricSource for InducedMetric {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn jet(&self, x: &[f64]) -> Result<MetricJet> {
        let n = self.spec.dim();
        let (mut jet, h, p2, f) = self.first(x)?;
        let t = self.third_derivatives(x)?;
        let f3 = |a: usize, b: usize, c: usize| t[(a * n + b) * n + c];
        for i in 0..n {
            for j in 0..=i {
                for k in 0..n {
                    for l in 0..=k {
                        let v = h.d2g(i, j, k, l)
                            + p2.hess(k, l) * f.d(i) * f.d(j)
                            + p2.d(k) * (f.hess(i, l) * f.d(j) + f.d(i) * f.hess(j, l))
                            + p2.d(l) * (f.hess(i, k) * f.d(j) + f.d(i) * f.hess(j, k))
                            + p2.value()
                                * (f3(i, k, l) * f.d(j)
                                    + f.hess(i, k) * f.hess(j, l)
                                    + f.hess(i, l) * f.hess(j, k)
                                    + f.d(i) * f3(j, k, l));
                        jet.set_d2g(i, j, k, l, v);
                    }
                }
            }
        }
        jet.inverse()?;
        Ok(jet)
    }

    fn jet_first_order(&self, x: &[f64]) -> Result<MetricJet> {
        let (jet, ..) = self.first(x)?;
        jet.inverse()?;
        Ok(jet)
    }
}

/// `|R_g(Gauss) − R_g(intrinsic)| / max(1, |R_g|)`.
pub fn intrinsic_scalar_crosscheck(spec: &GraphSpec, x: &[f64]) -> Result<f64> {
    let gauss = graph_jet(spec, x)?.r_g;
    let intrinsic = curvature(&InducedMetric::new(spec).jet(x)?)?.scalar;
    Ok((gauss - intrinsic).abs() / gauss.abs().max(1.0))
}

/// Finite-difference scheme for the divergence in [`flux_residual`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdScheme {
    Central,
    /// One Richardson step on top of central differences.
    Richardson,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxResidual {
    pub divergence: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Default divergence step at `x`.
pub fn default_fd_step(x: &[f64]) -> f64 {
    1e-4 * norm(x).max(1.0)
}

/// `|div_g(GXᵀ) − (2S₂Θ + Ric_ḡ(N, Xᵀ))|` with the divergence
/// `(det g)^{-1/2} ∂_i(√det g (GXᵀ)^i)` taken by finite differences.
pub fn flux_residual(spec: &GraphSpec, x: &[f64], step: f64, scheme: FdScheme) -> Result<FluxResidual> {
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("finite-difference step {step} must be positive")));
    }
    let n = spec.dim();
    let centre = graph_jet(spec, x)?;
    let flux_at = |y: &[f64], i: usize| -> Result<f64> {
        let j = graph_jet(spec, y)?;
        Ok(j.sqrt_det_g() * j.gxt[i])
    };
    let central = |s: f64| -> Result<f64> {
        let mut total = 0.0;
        for i in 0..n {
            let mut yp = x.to_vec();
            let mut ym = x.to_vec();
            yp[i] += s;
            ym[i] -= s;
            total += (flux_at(&yp, i)? - flux_at(&ym, i)?) / (2.0 * s);
        }
        Ok(total)
    };
    let sum = match scheme {
        FdScheme::Central => central(step)?,
        FdScheme::Richardson => (4.0 * central(0.5 * step)? - central(step)?) / 3.0,
    };
    let divergence = sum / centre.sqrt_det_g();
    let rhs = centre.flux_rhs();
    Ok(FluxResidual {
        divergence,
        rhs,
        residual: (divergence - rhs).abs(),
    })
}

/// `|reduced − general|` between the product-case and general right-hand sides.
/// Errors with `HypothesisViolated` unless the ambient is a product.
pub fn product_reduction_residual(spec: &GraphSpec, x: &[f64]) -> Result<f64> {
    if !spec.ambient.is_product() {
        return Err(Error::HypothesisViolated("the ambient is not a Riemannian product".into()));
    }
    let jet = graph_jet(spec, x)?;
    Ok((jet.product_rhs() - jet.flux_rhs()).abs())
}

/// Data of `Γ = {|x| = ρ}` at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySample {
    pub point: Vec<f64>,
    /// Mean curvature of `Γ` in the slice.
    pub s1_mu: f64,
    /// Mean curvature of `Γ` in `M`.
    pub s1_eta: f64,
    pub x_eta: f64,
    pub mu_eta: f64,
    /// `φ` on `Γ`.
    pub phi: f64,
    /// Area element of `Γ` in the slice relative to the Euclidean one.
    pub area_factor: f64,
}

impl BoundarySample {
    pub fn orthono_residual(&self) -> f64 {
        (self.s1_eta - self.s1_mu * self.mu_eta).abs() / self.s1_mu.abs().max(1.0)
    }
}

/// Evaluates [`BoundarySample`] at `x` with `|x| = ρ`.
pub fn boundary_sample(spec: &GraphSpec, x: &[f64]) -> Result<BoundarySample> {
    spec.check_domain(x)?;
    let n = spec.dim();
    let slice = sphere_geometry(&spec.ambient.base_jet(x)?)?;
    let induced = sphere_geometry(&InducedMetric::new(spec).jet_first_order(x)?)?;
    let h = spec.ambient.base_jet(x)?;
    let f = spec.f.eval_jet2(x)?;
    let phi = spec.ambient.phi_jet(x)?.value();
    let mut mu_eta = 0.0;
    for i in 0..n {
        for j in 0..n {
            mu_eta += h.g(i, j) * slice.normal[i] * induced.normal[j];
        }
    }
    let x_eta = -phi * phi * (0..n).map(|i| f.d(i) * induced.normal[i]).sum::<f64>();
    Ok(BoundarySample {
        point: x.to_vec(),
        s1_mu: slice.mean_curvature,
        s1_eta: induced.mean_curvature,
        x_eta,
        mu_eta,
        phi,
        area_factor: slice.area_factor,
    })
}

/// Boundary data sampled on `Γ`.
#[derive(Clone, Debug)]
pub struct BoundaryConormalData {
    /// Radius where the samples were taken (offset from `ρ` at a horizon).
    pub radius: f64,
    pub samples: Vec<BoundarySample>,
    pub orthono_residual: f64,
}

/// Checks that the samples agree up to `tol`, as they must on a rotationally
/// symmetric configuration.
pub(crate) fn check_symmetric(samples: &[BoundarySample], tol: f64) -> Result<()> {
    let first = &samples[0];
    for s in &samples[1..] {
        for (a, b, what) in [
            (s.s1_mu, first.s1_mu, "slice mean curvature"),
            (s.s1_eta, first.s1_eta, "mean curvature in M"),
            (s.mu_eta, first.mu_eta, "conormal angle"),
            (s.phi, first.phi, "warping function"),
            (s.area_factor, first.area_factor, "area element"),
        ] {
            if (a - b).abs() > tol * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::NotRotationallySymmetric(format!(
                    "{what} varies on the boundary sphere: {b} at {:?}, {a} at {:?}",
                    first.point, s.point
                )));
            }
        }
    }
    Ok(())
}

/// Boundary data on the coordinate sphere of radius `ρ`, checking the
/// relation between the two mean curvatures of `Γ`.
pub fn boundary_conormal_data(spec: &GraphSpec, rho: f64) -> Result<BoundaryConormalData> {
    let n = spec.dim();
    let radius = match &spec.boundary {
        Some(b) if (b.radius - rho).abs() <= 1e-12 * rho => b.evaluation_radius(),
        _ => rho,
    };
    let f_values: Vec<f64> = sample_rays(n)
        .iter()
        .map(|ray| {
            let x: Vec<f64> = ray.iter().map(|w| w * radius).collect();
            spec.f.value(&x)
        })
        .collect::<std::result::Result<_, _>>()?;
    if f_values
        .iter()
        .any(|v| (v - f_values[0]).abs() > 1e-9 * f_values[0].abs().max(1.0))
    {
        return Err(Error::NotRotationallySymmetric(
            "the graph function is not constant on the boundary sphere".into(),
        ));
    }
    let samples = sample_rays(n)
        .iter()
        .map(|ray| {
            let x: Vec<f64> = ray.iter().map(|w| w * radius).collect();
            boundary_sample(spec, &x)
        })
        .collect::<Result<Vec<_>>>()?;
    check_symmetric(&samples, 1e-9)?;
    let orthono_residual = samples.iter().map(BoundarySample::orthono_residual).fold(0.0, f64::max);
    Ok(BoundaryConormalData {
        radius,
        samples,
        orthono_residual,
    })
}

/// `(s, |GXᵀ_(1)|, |GXᵀ_(2)|)` along the ray `s ω`.
pub fn newton_terms_along_ray(spec: &GraphSpec, direction: &[f64], radii: &[f64]) -> Result<Vec<[f64; 3]>> {
    let len = norm(direction);
    radii
        .iter()
        .map(|&s| {
            let x: Vec<f64> = direction.iter().map(|w| w * s / len).collect();
            let jet = graph_jet(spec, &x)?;
            Ok([s, norm(&jet.gxt1), norm(&jet.gxt2)])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{christoffel, MetricField};
    use std::collections::BTreeMap;

    fn field(src: &str, n: usize) -> ScalarField {
        ScalarField::parse(src, n, &BTreeMap::new()).unwrap()
    }

    fn flat_spec(f: &str, n: usize) -> GraphSpec {
        GraphSpec::new(WarpedAmbient::product(MetricField::flat(n)), field(f, n), (n as f64 - 2.0).max(0.5)).unwrap()
    }

    fn warped_spec() -> GraphSpec {
        let base = MetricField::conformal(field("(1 + 1/(2*r))^4", 3), 1.0).unwrap();
        let amb = WarpedAmbient::new(base, field("1 + 0.5/r", 3)).unwrap();
        GraphSpec::new(amb, field("0.7*exp(-0.2*r^2) + 0.1*x1*x2/r", 3), 1.0).unwrap()
    }

    #[test]
    fn constant_graph_is_a_slice() {
        let spec = GraphSpec::new(warped_spec().ambient, ScalarField::constant(3, 2.0), 1.0).unwrap();
        let jet = graph_jet(&spec, &[1.0, 0.5, -0.3]).unwrap();
        assert_eq!(jet.w, 1.0);
        assert!(jet.shape.iter().all(|v| *v == 0.0));
        assert_eq!((jet.s1, jet.s2), (0.0, 0.0));
        assert!(jet.gxt.iter().all(|v| *v == 0.0));
        assert_eq!(jet.theta, jet.phi.value());
        assert_eq!(newton_contraction_residual(&spec, &[1.0, 0.5, -0.3]).unwrap(), 0.0);
    }

    #[test]
    fn paraboloid_at_its_vertex() {
        for n in [2usize, 3, 4] {
            let src = (1..=n).map(|i| format!("x{i}^2")).collect::<Vec<_>>().join(" + ");
            let spec = flat_spec(&format!("({src})/2"), n);
            let jet = graph_jet(&spec, &vec![0.0; n]).unwrap();
            assert_eq!(jet.w, 1.0);
            for i in 0..n {
                for j in 0..n {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    assert_eq!(jet.alpha[i * n + j], delta);
                    assert_eq!(jet.shape[i * n + j], delta);
                }
            }
            assert_eq!(jet.s1, n as f64);
            assert_eq!(jet.s2, (n * (n - 1)) as f64 / 2.0);
        }
    }

    #[test]
    fn flamm_graph_is_scalar_flat() {
        let spec = flat_spec("sqrt(8*(r - 2))", 3);
        let jet = graph_jet(&spec, &[3.0, 0.0, 0.0]).unwrap();
        assert!(jet.r_g.abs() <= 1e-8, "{}", jet.r_g);
        assert!(intrinsic_scalar_crosscheck(&spec, &[3.0, 0.0, 0.0]).unwrap() <= 1e-7);
    }

    #[test]
    fn pointwise_invariants() {
        let spec = warped_spec();
        let n = 3;
        for x in [[1.2, -0.3, 0.8], [0.4, 2.2, -1.1], [3.0, 1.0, 0.5]] {
            let jet = graph_jet(&spec, &x).unwrap();
            // g^{ik} g_kj = δ
            for i in 0..n {
                for j in 0..n {
                    let s: f64 = (0..n).map(|k| jet.ginv[i * n + k] * jet.g[k * n + j]).sum();
                    let delta = if i == j { 1.0 } else { 0.0 };
                    assert!((s - delta).abs() <= 1e-12);
                }
            }
            // metric inverse against the closed form h^{ij} − φ² f^i f^j / W²
            let p = jet.phi.value();
            for i in 0..n {
                for j in 0..n {
                    let closed = jet.hinv[i * n + j] - p * p * jet.f_up[i] * jet.f_up[j] / (jet.w * jet.w);
                    assert!((closed - jet.ginv[i * n + j]).abs() <= 1e-12);
                }
            }
            // unit normal orthogonal to the frame
            let amb = spec.ambient.metric_jet(&x).unwrap();
            let ip = |u: &[f64], v: &[f64]| {
                let mut s = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        s += amb.g(a, b) * u[a] * v[b];
                    }
                }
                s
            };
            assert!((ip(&jet.normal, &jet.normal) - 1.0).abs() <= 1e-12);
            for i in 0..n {
                let mut z = vec![0.0; 4];
                z[i] = 1.0;
                z[3] = jet.f.d(i);
                assert!(ip(&jet.normal, &z).abs() <= 1e-12);
            }
            let mut t = vec![0.0; 4];
            t[3] = 1.0;
            assert!((ip(&t, &jet.normal) - jet.theta).abs() <= 1e-12);
            // self-adjointness and S₂ through the eigenvalue-free formula
            for i in 0..n {
                for j in 0..n {
                    let a: f64 = (0..n).map(|k| jet.g[i * n + k] * jet.shape[k * n + j]).sum();
                    let b: f64 = (0..n).map(|k| jet.g[j * n + k] * jet.shape[k * n + i]).sum();
                    assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
                }
            }
            assert!(jet.theta > 0.0);
            assert!(newton_contraction_residual(&spec, &x).unwrap() <= 1e-12);
            assert!(newton_contraction_residual_perturbed(&spec, &x, 1e-3).unwrap() > 1e-5);
        }
    }

    // α_jk = ⟨∇̄_{Z_j} Z_k, N⟩ straight from ambient Christoffel symbols.
    #[test]
    fn shape_operator_matches_ambient_connection() {
        let spec = warped_spec();
        let x = [1.1, -0.6, 0.9];
        let jet = graph_jet(&spec, &x).unwrap();
        let amb = spec.ambient.metric_jet(&x).unwrap();
        let (ginv, _) = amb.inverse().unwrap();
        let gamma = christoffel(&amb, &ginv);
        let z = |i: usize| {
            let mut v = vec![0.0; 4];
            v[i] = 1.0;
            v[3] = jet.f.d(i);
            v
        };
        for j in 0..3 {
            for k in 0..3 {
                let (zj, zk) = (z(j), z(k));
                let mut cov = vec![0.0; 4];
                cov[3] = jet.f.hess(j, k);
                for c in 0..4 {
                    for a in 0..4 {
                        for b in 0..4 {
                            cov[c] += gamma[(c * 4 + a) * 4 + b] * zj[a] * zk[b];
                        }
                    }
                }
                let mut alpha = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        alpha += amb.g(a, b) * cov[a] * jet.normal[b];
                    }
                }
                assert!((alpha - jet.alpha[j * 3 + k]).abs() <= 1e-12, "{j}{k}");
            }
        }
    }

    #[test]
    fn newton_tensor_commutes_with_shape() {
        let jet = graph_jet(&warped_spec(), &[0.9, 1.3, -0.2]).unwrap();
        let n = 3;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut c = 0.0;
                for k in 0..n {
                    c += jet.shape[i * n + k] * jet.newton[k * n + j] - jet.newton[i * n + k] * jet.shape[k * n + j];
                }
                worst = worst.max(c.abs());
            }
        }
        assert!(worst <= 1e-12 * norm(&jet.shape) * norm(&jet.newton));
    }

    #[test]
    fn gauss_equation_matches_intrinsic_curvature() {
        let spec = warped_spec();
        for x in [[1.2, -0.3, 0.8], [0.4, 2.2, -1.1]] {
            assert!(intrinsic_scalar_crosscheck(&spec, &x).unwrap() <= 1e-7);
        }
        let flat = flat_spec("0", 3);
        assert_eq!(intrinsic_scalar_crosscheck(&flat, &[1.0, 1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn flux_formula_converges() {
        let spec = warped_spec();
        let x = [1.2, -0.3, 0.8];
        let coarse = flux_residual(&spec, &x, 1e-2, FdScheme::Central).unwrap();
        let fine = flux_residual(&spec, &x, 5e-3, FdScheme::Central).unwrap();
        let ratio = coarse.residual / fine.residual;
        assert!((ratio - 4.0).abs() < 0.6, "ratio {ratio}");
        let rich = flux_residual(&spec, &x, 1e-3, FdScheme::Richardson).unwrap();
        assert!(rich.residual <= 1e-8 * rich.rhs.abs().max(1.0));
    }

    #[test]
    fn product_reduction_agrees() {
        let base = MetricField::conformal(field("(1 + 1/(2*r))^4", 3), 1.0).unwrap();
        let spec = GraphSpec::new(WarpedAmbient::product(base), field("exp(-r^2/4) + 0.2*x3/r", 3), 1.0).unwrap();
        assert!(product_reduction_residual(&spec, &[0.7, 1.1, -0.4]).unwrap() <= 1e-9);
        assert!(product_reduction_residual(&warped_spec(), &[0.7, 1.1, -0.4]).is_err());
    }

    #[test]
    fn excised_flat_disk() {
        let spec = flat_spec("0", 3).with_boundary(InnerBoundary::excised(1.0)).unwrap();
        let data = boundary_conormal_data(&spec, 1.0).unwrap();
        for s in &data.samples {
            assert!((s.s1_mu - 2.0).abs() <= 1e-12);
            assert!((s.s1_eta - 2.0).abs() <= 1e-12);
            assert!((s.mu_eta - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn tilted_cap_satisfies_conormal_relation() {
        let spec = flat_spec("0.3*(4 - r^2)", 3).with_boundary(InnerBoundary::excised(2.0)).unwrap();
        let data = boundary_conormal_data(&spec, 2.0).unwrap();
        assert!(data.orthono_residual <= 1e-7);
        assert!(data.samples[0].mu_eta < 1.0);
        let bumpy = flat_spec("x1", 3).with_boundary(InnerBoundary::excised(2.0)).unwrap();
        assert!(matches!(
            boundary_conormal_data(&bumpy, 2.0),
            Err(Error::NotRotationallySymmetric(_))
        ));
    }

    #[test]
    fn flamm_boundary_is_nearly_minimal() {
        let spec = flat_spec("sqrt(8*(r - 2))", 3).with_boundary(InnerBoundary::horizon(2.0)).unwrap();
        let data = boundary_conormal_data(&spec, 2.0).unwrap();
        let s = &data.samples[0];
        // ⟨μ,η⟩ = √(1 − 2m/r) at r = 2(1 + ε)
        let expected = (1.0 - 1.0 / 1.001f64).sqrt();
        assert!((s.mu_eta - expected).abs() <= 1e-9);
        assert!(s.s1_eta.abs() <= 0.05);
        assert!((s.x_eta + 1.0).abs() <= 1e-3);
        assert!(data.orthono_residual <= 1e-9);
        assert!(graph_jet(&spec, &[2.0, 0.0, 0.0]).is_err());
    }
}

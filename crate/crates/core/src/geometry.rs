//! Coordinate curvature of a Riemannian metric from its 2-jet.
//!
//! Conventions: `Γ^k_ij = ½ g^{kl}(∂_i g_lj + ∂_j g_li − ∂_l g_ij)`,
//! `R^l_ijk = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik`,
//! `R_jk = R^i_ijk`. Round spheres have positive scalar curvature.

use crate::error::{Error, Result};
use crate::fieldexpr::{Jet2, ScalarField};

/// Metric coefficients with first and second coordinate derivatives at a point.
///
/// Layout: `g[i][j]`, `dg[i][j][k] = ∂_k g_ij`, `d2g[i][j][k][l] = ∂_k ∂_l g_ij`,
/// flattened row-major. Setters write every symmetric slot at once.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricJet {
    dim: usize,
    point: Vec<f64>,
    g: Vec<f64>,
    dg: Vec<f64>,
    d2g: Vec<f64>,
}

impl MetricJet {
    pub fn zeros(dim: usize, point: &[f64]) -> Self {
        Self {
            dim,
            point: point.to_vec(),
            g: vec![0.0; dim * dim],
            dg: vec![0.0; dim * dim * dim],
            d2g: vec![0.0; dim * dim * dim * dim],
        }
    }

    pub fn flat(dim: usize, point: &[f64]) -> Self {
        let mut jet = Self::zeros(dim, point);
        for i in 0..dim {
            jet.set_g(i, i, 1.0);
        }
        jet
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    #[inline]
    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.dim + j]
    }

    #[inline]
    pub fn dg(&self, i: usize, j: usize, k: usize) -> f64 {
        self.dg[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    pub fn d2g(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let d = self.dim;
        self.d2g[((i * d + j) * d + k) * d + l]
    }

    pub fn set_g(&mut self, i: usize, j: usize, v: f64) {
        let d = self.dim;
        self.g[i * d + j] = v;
        self.g[j * d + i] = v;
    }

    pub fn set_dg(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let d = self.dim;
        self.dg[(i * d + j) * d + k] = v;
        self.dg[(j * d + i) * d + k] = v;
    }

    pub fn set_d2g(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let d = self.dim;
        for (a, b) in [(i, j), (j, i)] {
            self.d2g[((a * d + b) * d + k) * d + l] = v;
            self.d2g[((a * d + b) * d + l) * d + k] = v;
        }
    }

    /// Writes the coefficient `g_ij` and its derivatives over the first
    /// `jet.dim()` coordinates from a scalar jet.
    pub fn set_from_jet(&mut self, i: usize, j: usize, jet: &Jet2) {
        self.set_g(i, j, jet.value());
        for k in 0..jet.dim() {
            self.set_dg(i, j, k, jet.d(k));
            for l in 0..=k {
                self.set_d2g(i, j, k, l, jet.hess(k, l));
            }
        }
    }

    pub fn metric_matrix(&self) -> &[f64] {
        &self.g
    }

    /// Inverse metric (row-major) and determinant via Cholesky.
    pub fn inverse(&self) -> Result<(Vec<f64>, f64)> {
        spd_inverse(&self.g, self.dim).ok_or_else(|| {
            Error::NotPositiveDefinite(format!("metric at {:?}", self.point))
        })
    }
}

/// Lower Cholesky factor of a symmetric matrix, or `None` if it is not
/// positive definite.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= l[j * n + k] * l[j * n + k];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let d = diag.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

/// Inverse and determinant of a symmetric positive definite matrix.
pub fn spd_inverse(a: &[f64], n: usize) -> Option<(Vec<f64>, f64)> {
    let l = cholesky(a, n)?;
    let det = (0..n).map(|i| l[i * n + i]).product::<f64>().powi(2);
    // Solve L Y = I, then Lᵀ X = Y column by column.
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for c in 0..n {
        for i in 0..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[i * n + k] * col[k];
            }
            col[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in i + 1..n {
                s -= l[k * n + i] * inv[k * n + c];
            }
            inv[i * n + c] = s / l[i * n + i];
        }
    }
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (inv[i * n + j] + inv[j * n + i]);
            inv[i * n + j] = avg;
            inv[j * n + i] = avg;
        }
    }
    Some((inv, det))
}

/// Anything that yields metric jets in a single chart.
pub trait MetricSource: Send + Sync {
    fn dim(&self) -> usize;

    fn jet(&self, x: &[f64]) -> Result<MetricJet>;

    /// A jet whose second derivatives may be left at zero. Used where only
    /// Christoffel symbols are needed.
    fn jet_first_order(&self, x: &[f64]) -> Result<MetricJet> {
        self.jet(x)
    }
}

#[derive(Clone, Debug)]
enum Coefficients {
    Flat,
    /// `h = c(x) δ`.
    Conformal(ScalarField),
    /// Upper triangle, `entries[j(j+1)/2 + i]` holds `h_ij` for `i ≤ j`.
    General(Vec<ScalarField>),
}

/// A Riemannian metric on a chart given by closed-form coefficients, together
/// with its declared decay exponent.
#[derive(Clone, Debug)]
pub struct MetricField {
    dim: usize,
    coefficients: Coefficients,
    tau: f64,
}

fn check_tau(dim: usize, tau: f64) -> Result<()> {
    if !(tau > (dim as f64 - 2.0) / 2.0) {
        return Err(Error::InvalidInput(format!(
            "decay exponent {tau} must exceed (n-2)/2 = {}",
            (dim as f64 - 2.0) / 2.0
        )));
    }
    Ok(())
}

impl MetricField {
    /// The Euclidean metric. Its decay exponent is unconstrained; `n` is stored.
    pub fn flat(dim: usize) -> Self {
        Self {
            dim,
            coefficients: Coefficients::Flat,
            tau: dim as f64,
        }
    }

    /// `h = factor · δ`.
    pub fn conformal(factor: ScalarField, tau: f64) -> Result<Self> {
        let dim = factor.dim();
        check_tau(dim, tau)?;
        Ok(Self {
            dim,
            coefficients: Coefficients::Conformal(factor),
            tau,
        })
    }

    /// Coefficients listed row by row over the upper triangle
    /// (`h_11, h_12, …, h_1n, h_22, …`).
    pub fn from_upper_triangle(dim: usize, rows: Vec<ScalarField>, tau: f64) -> Result<Self> {
        if rows.len() != dim * (dim + 1) / 2 {
            return Err(Error::InvalidInput(format!(
                "expected {} metric coefficients, got {}",
                dim * (dim + 1) / 2,
                rows.len()
            )));
        }
        if rows.iter().any(|f| f.dim() != dim) {
            return Err(Error::InvalidInput("metric coefficient dimension mismatch".into()));
        }
        check_tau(dim, tau)?;
        let mut packed: Vec<Option<ScalarField>> = vec![None; rows.len()];
        let mut it = rows.into_iter();
        for i in 0..dim {
            for j in i..dim {
                packed[j * (j + 1) / 2 + i] = it.next();
            }
        }
        Ok(Self {
            dim,
            coefficients: Coefficients::General(packed.into_iter().map(Option::unwrap).collect()),
            tau,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.coefficients, Coefficients::Flat)
    }

    /// True when every coefficient depends on `x` only through `|x|` and the
    /// metric is conformally flat or flat.
    pub fn is_radial(&self) -> bool {
        match &self.coefficients {
            Coefficients::Flat => true,
            Coefficients::Conformal(c) => c.is_radial(),
            Coefficients::General(_) => false,
        }
    }

    pub fn describe(&self) -> String {
        match &self.coefficients {
            Coefficients::Flat => "flat".into(),
            Coefficients::Conformal(c) => format!("({}) * delta", c.describe()),
            Coefficients::General(e) => {
                let parts: Vec<String> = e.iter().map(ScalarField::describe).collect();
                format!("[{}]", parts.join(", "))
            }
        }
    }
}

impl MetricSource for MetricField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, x: &[f64]) -> Result<MetricJet> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "point of dimension {} for an {}-dimensional metric",
                x.len(),
                self.dim
            )));
        }
        let n = self.dim;
        let jet = match &self.coefficients {
            Coefficients::Flat => MetricJet::flat(n, x),
            Coefficients::Conformal(c) => {
                let cj = c.eval_jet2(x)?;
                let mut jet = MetricJet::zeros(n, x);
                for i in 0..n {
                    jet.set_from_jet(i, i, &cj);
                }
                jet
            }
            Coefficients::General(entries) => {
                let mut jet = MetricJet::zeros(n, x);
                for j in 0..n {
                    for i in 0..=j {
                        let e = entries[j * (j + 1) / 2 + i].eval_jet2(x)?;
                        jet.set_from_jet(i, j, &e);
                    }
                }
                jet
            }
        };
        jet.inverse()?;
        Ok(jet)
    }
}

/// `Γ^k_ij` stored at `[(k * d + i) * d + j]`.
pub fn christoffel(jet: &MetricJet, ginv: &[f64]) -> Vec<f64> {
    let d = jet.dim();
    let first = christoffel_first(jet);
    let mut gamma = vec![0.0; d * d * d];
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for l in 0..d {
                    s += ginv[k * d + l] * first[(l * d + i) * d + j];
                }
                gamma[(k * d + i) * d + j] = s;
            }
        }
    }
    gamma
}

/// `Γ_lij = ½(∂_i g_lj + ∂_j g_li − ∂_l g_ij)` at `[(l * d + i) * d + j]`.
fn christoffel_first(jet: &MetricJet) -> Vec<f64> {
    let d = jet.dim();
    let mut out = vec![0.0; d * d * d];
    for l in 0..d {
        for i in 0..d {
            for j in 0..d {
                out[(l * d + i) * d + j] =
                    0.5 * (jet.dg(l, j, i) + jet.dg(l, i, j) - jet.dg(i, j, l));
            }
        }
    }
    out
}

/// Connection and curvature at one point.
#[derive(Clone, Debug)]
pub struct CurvatureData {
    dim: usize,
    pub ginv: Vec<f64>,
    pub det: f64,
    /// `Γ^k_ij` at `[(k * d + i) * d + j]`.
    pub christoffel: Vec<f64>,
    /// `R^l_ijk` at `[((l * d + i) * d + j) * d + k]`.
    pub riemann: Vec<f64>,
    /// `R_ij` row-major.
    pub ricci: Vec<f64>,
    pub scalar: f64,
}

impl CurvatureData {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        self.christoffel[(k * self.dim + i) * self.dim + j]
    }

    #[inline]
    pub fn riemann_up(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let d = self.dim;
        self.riemann[((l * d + i) * d + j) * d + k]
    }

    #[inline]
    pub fn ricci(&self, i: usize, j: usize) -> f64 {
        self.ricci[i * self.dim + j]
    }

    /// `R_ijkl = g_lm R^m_ijk` for the metric the data was built from.
    pub fn riemann_lowered(&self, jet: &MetricJet) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d * d * d * d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let mut s = 0.0;
                        for m in 0..d {
                            s += jet.g(l, m) * self.riemann_up(m, i, j, k);
                        }
                        out[((i * d + j) * d + k) * d + l] = s;
                    }
                }
            }
        }
        out
    }

    /// `Ric(u, v)` for coordinate-component vectors.
    pub fn ricci_apply(&self, u: &[f64], v: &[f64]) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += self.ricci[i * d + j] * u[i] * v[j];
            }
        }
        s
    }
}

/// Christoffel symbols, Riemann, Ricci and scalar curvature from a metric jet.
///
/// Everything is assembled analytically from `(g, ∂g, ∂²g)`.
pub fn curvature(jet: &MetricJet) -> Result<CurvatureData> {
    let d = jet.dim();
    let (ginv, det) = jet.inverse()?;
    let first = christoffel_first(jet);
    let mut gamma = vec![0.0; d * d * d];
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for l in 0..d {
                    s += ginv[k * d + l] * first[(l * d + i) * d + j];
                }
                gamma[(k * d + i) * d + j] = s;
            }
        }
    }
    // ∂_m Γ^k_ij = g^{kl} (∂_m Γ_lij − ∂_m g_la Γ^a_ij), stored at [(((k d + i) d + j) d + m]
    let mut dgamma = vec![0.0; d * d * d * d];
    let mut inner = vec![0.0; d];
    for i in 0..d {
        for j in 0..d {
            for m in 0..d {
                for (l, slot) in inner.iter_mut().enumerate() {
                    let dfirst = 0.5 * (jet.d2g(l, j, i, m) + jet.d2g(l, i, j, m) - jet.d2g(i, j, l, m));
                    let mut corr = 0.0;
                    for a in 0..d {
                        corr += jet.dg(l, a, m) * gamma[(a * d + i) * d + j];
                    }
                    *slot = dfirst - corr;
                }
                for k in 0..d {
                    let mut s = 0.0;
                    for l in 0..d {
                        s += ginv[k * d + l] * inner[l];
                    }
                    dgamma[((k * d + i) * d + j) * d + m] = s;
                }
            }
        }
    }
    let g_at = |k: usize, i: usize, j: usize| gamma[(k * d + i) * d + j];
    let dg_at = |k: usize, i: usize, j: usize, m: usize| dgamma[((k * d + i) * d + j) * d + m];
    let mut riemann = vec![0.0; d * d * d * d];
    for l in 0..d {
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let mut s = dg_at(l, j, k, i) - dg_at(l, i, k, j);
                    for m in 0..d {
                        s += g_at(l, i, m) * g_at(m, j, k) - g_at(l, j, m) * g_at(m, i, k);
                    }
                    riemann[((l * d + i) * d + j) * d + k] = s;
                }
            }
        }
    }
    let mut ricci = vec![0.0; d * d];
    for j in 0..d {
        for k in 0..d {
            let mut s = 0.0;
            for i in 0..d {
                s += riemann[((i * d + i) * d + j) * d + k];
            }
            ricci[j * d + k] = s;
        }
    }
    for j in 0..d {
        for k in 0..j {
            let avg = 0.5 * (ricci[j * d + k] + ricci[k * d + j]);
            ricci[j * d + k] = avg;
            ricci[k * d + j] = avg;
        }
    }
    let scalar = (0..d * d).map(|a| ginv[a] * ricci[a]).sum();
    Ok(CurvatureData {
        dim: d,
        ginv,
        det,
        christoffel: gamma,
        riemann,
        ricci,
        scalar,
    })
}

/// Geometry of the coordinate sphere through a point, inside a given metric.
#[derive(Clone, Debug)]
pub struct SphereGeometry {
    /// Mean curvature with respect to the outward unit normal, positive on
    /// convex spheres: `(n − 1)/ρ` in the flat metric.
    pub mean_curvature: f64,
    /// Outward unit normal (coordinate components).
    pub normal: Vec<f64>,
    /// Ratio of the induced area element to the Euclidean one.
    pub area_factor: f64,
}

/// Mean curvature, normal and area factor of `{|x| = |point|}` at `point`.
pub fn sphere_geometry(jet: &MetricJet) -> Result<SphereGeometry> {
    let d = jet.dim();
    let x = jet.point();
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return Err(Error::InvalidInput("coordinate sphere of radius zero".into()));
    }
    let (ginv, det) = jet.inverse()?;
    let gamma = christoffel(jet, &ginv);
    let unit: Vec<f64> = x.iter().map(|v| v / r).collect();
    let mut up = vec![0.0; d];
    for i in 0..d {
        for j in 0..d {
            up[i] += ginv[i * d + j] * unit[j];
        }
    }
    let norm = (0..d).map(|i| up[i] * unit[i]).sum::<f64>().sqrt();
    let normal: Vec<f64> = up.iter().map(|v| v / norm).collect();
    let mut mean = 0.0;
    for i in 0..d {
        for j in 0..d {
            let delta = if i == j { 1.0 } else { 0.0 };
            let mut hess = (delta - unit[i] * unit[j]) / r;
            for k in 0..d {
                hess -= gamma[(k * d + i) * d + j] * unit[k];
            }
            mean += (ginv[i * d + j] - normal[i] * normal[j]) * hess;
        }
    }
    Ok(SphereGeometry {
        mean_curvature: mean / norm,
        normal,
        area_factor: det.sqrt() * norm,
    })
}

/// Mean curvature of the coordinate sphere `{|x| = ρ}` at `point`.
pub fn sphere_mean_curvature(metric: &dyn MetricSource, rho: f64, point: &[f64]) -> Result<f64> {
    let r = point.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (r - rho).abs() > 1e-12 * rho.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "point at radius {r} does not lie on the sphere of radius {rho}"
        )));
    }
    Ok(sphere_geometry(&metric.jet_first_order(point)?)?.mean_curvature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn schwarzschild_conformal(m: f64) -> MetricField {
        let mut p = BTreeMap::new();
        p.insert("m".to_string(), m);
        MetricField::conformal(ScalarField::parse("(1 + m/(2*r))^4", 3, &p).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
        let (inv, det) = spd_inverse(&[4.0, 2.0, 2.0, 3.0], 2).unwrap();
        assert!((det - 8.0).abs() < 1e-14);
        assert!((inv[0] - 3.0 / 8.0).abs() < 1e-15);
        assert!((inv[1] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn flat_metric_has_no_curvature() {
        let jet = MetricField::flat(3).jet(&[1.0, 2.0, 3.0]).unwrap();
        let c = curvature(&jet).unwrap();
        assert!(c.christoffel.iter().all(|v| *v == 0.0));
        assert!(c.riemann.iter().all(|v| *v == 0.0));
        assert_eq!(c.scalar, 0.0);
    }

    #[test]
    fn conformal_schwarzschild_coefficients() {
        let h = schwarzschild_conformal(1.0);
        let jet = h.jet(&[2.0, 0.0, 0.0]).unwrap();
        assert!((jet.g(0, 0) - 2.44140625).abs() < 1e-14);
        assert_eq!(jet.g(0, 1), 0.0);
        // Central differences of the coefficients.
        let step = 1e-5;
        for k in 0..3 {
            let mut p = [2.0, 0.0, 0.0];
            p[k] += step;
            let plus = h.jet(&p).unwrap();
            p[k] -= 2.0 * step;
            let minus = h.jet(&p).unwrap();
            for i in 0..3 {
                let fd = (plus.g(i, i) - minus.g(i, i)) / (2.0 * step);
                let ad = jet.dg(i, i, k);
                assert!((fd - ad).abs() <= 1e-7 * ad.abs().max(1.0), "{fd} vs {ad}");
            }
        }
    }

    #[test]
    fn harmonic_conformal_factor_is_scalar_flat() {
        let h = schwarzschild_conformal(1.0);
        for x in [[2.0, 0.0, 0.0], [0.3, -1.2, 0.8], [5.0, 4.0, -3.0]] {
            let c = curvature(&h.jet(&x).unwrap()).unwrap();
            assert!(c.scalar.abs() <= 1e-8, "R = {}", c.scalar);
        }
    }

    #[test]
    fn round_sphere_in_stereographic_chart() {
        // g = 4ρ² / (1 + |y|²)² δ on R², the round sphere of radius ρ.
        let rho = 1.7f64;
        let mut p = BTreeMap::new();
        p.insert("c".to_string(), 4.0 * rho * rho);
        let f = ScalarField::parse("c / (1 + x1^2 + x2^2)^2", 2, &p).unwrap();
        let g = MetricField::conformal(f, 1.0).unwrap();
        for y in [[0.1, 0.2], [1.5, -0.7], [-3.0, 2.0]] {
            let c = curvature(&g.jet(&y).unwrap()).unwrap();
            assert!((c.scalar - 2.0 / (rho * rho)).abs() <= 1e-10, "{}", c.scalar);
        }
    }

    #[test]
    fn flat_sphere_mean_curvature() {
        for (n, rho) in [(3usize, 2.0f64), (4, 3.0), (5, 1.3)] {
            let mut x = vec![0.0; n];
            x[0] = rho * 0.6;
            x[n - 1] = rho * 0.8;
            let h = sphere_mean_curvature(&MetricField::flat(n), rho, &x).unwrap();
            assert!((h - (n as f64 - 1.0) / rho).abs() <= 1e-10);
        }
        assert!(sphere_mean_curvature(&MetricField::flat(3), 2.0, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn conformal_sphere_mean_curvature_matches_closed_form() {
        // For u⁴δ the coordinate sphere has H = u⁻²(2/r + 4 u'/u).
        let h = schwarzschild_conformal(1.0);
        let r = 3.0;
        let u = 1.0 + 1.0 / (2.0 * r);
        let du = -1.0 / (2.0 * r * r);
        let expected = (2.0 / r + 4.0 * du / u) / (u * u);
        let got = sphere_mean_curvature(&h, r, &[0.0, r, 0.0]).unwrap();
        assert!((got - expected).abs() < 1e-12);
        // The horizon r = m/2 is minimal.
        let got = sphere_mean_curvature(&h, 0.5, &[0.0, 0.0, 0.5]).unwrap();
        assert!(got.abs() < 1e-12);
    }
}

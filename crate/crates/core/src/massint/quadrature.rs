//! Gauss rules, product rules on coordinate spheres and deterministic sums.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest base dimension handled by the sphere rules.
pub const MAX_SPHERE_DIM: usize = 6;

/// Volume of the unit `k`-sphere in `ℝ^{k+1}`, `2π^{(k+1)/2} / Γ((k+1)/2)`.
///
/// Evaluated through `ω_k = 2π ω_{k−2} / (k − 1)`, which is the same closed
/// form for integer `k` without a gamma function.
pub fn unit_sphere_volume(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI * unit_sphere_volume(k - 2) / (k as f64 - 1.0),
    }
}

/// Normalisation `c_n = 1 / (2(n − 1) ω_{n−1})` of the mass integrals.
pub fn mass_constant(n: usize) -> f64 {
    1.0 / (2.0 * (n as f64 - 1.0) * unit_sphere_volume(n - 1))
}

/// Gauss rule for the weight `(1 − t²)^{(m−1)/2}` on `[−1, 1]`, i.e. for
/// `sin^m θ dθ` in `t = cos θ`. `m = 1` is Gauss–Legendre.
///
/// Golub–Welsch on the Gegenbauer Jacobi matrix.
pub fn gauss_gegenbauer(points: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let lambda = m as f64 / 2.0;
    let mut jac = DMatrix::<f64>::zeros(points, points);
    for k in 1..points {
        let kf = k as f64;
        let beta = kf * (kf + 2.0 * lambda - 1.0) / (4.0 * (kf + lambda) * (kf + lambda - 1.0));
        jac[(k, k - 1)] = beta.sqrt();
        jac[(k - 1, k)] = beta.sqrt();
    }
    let mu0 = sine_power_integral(m);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..points)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Symmetrise: the rule is exactly even.
    let mut nodes = vec![0.0; points];
    let mut weights = vec![0.0; points];
    for i in 0..points {
        let j = points - 1 - i;
        nodes[i] = 0.5 * (pairs[i].0 - pairs[j].0);
        weights[i] = 0.5 * (pairs[i].1 + pairs[j].1);
    }
    (nodes, weights)
}

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(points: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_gegenbauer(points, 1);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        t.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|w| half * w).collect(),
    )
}

/// `∫_0^π sin^m θ dθ`.
fn sine_power_integral(m: usize) -> f64 {
    match m {
        0 => std::f64::consts::PI,
        1 => 2.0,
        _ => (m as f64 - 1.0) / m as f64 * sine_power_integral(m - 2),
    }
}

/// Product quadrature on the coordinate sphere `Σ_r ⊂ ℝⁿ`.
///
/// Each polar angle uses a Gauss rule in its cosine matched to the
/// `sin^k θ` factor of the measure; the azimuth uses the periodic trapezoid
/// rule with `2 · order` points. Weights include `r^{n−1}`.
#[derive(Clone, Debug)]
pub struct SphereRule {
    dim: usize,
    radius: f64,
    order: usize,
    /// Unit directions, `dim` entries each.
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl SphereRule {
    pub fn new(dim: usize, radius: f64, order: usize) -> Result<Self> {
        if dim > MAX_SPHERE_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if dim < 2 || order < 4 {
            return Err(Error::InvalidInput(format!(
                "sphere rule needs n >= 2 and order >= 4, got n = {dim}, order = {order}"
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidInput(format!("sphere radius {radius} must be positive")));
        }
        let (unit, w) = unit_rule(dim, order);
        let scale = radius.powi(dim as i32 - 1);
        Ok(Self {
            dim,
            radius,
            order,
            nodes: unit,
            weights: w.into_iter().map(|w| w * scale).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Unit direction of node `a`.
    pub fn direction(&self, a: usize) -> &[f64] {
        &self.nodes[a * self.dim..(a + 1) * self.dim]
    }

    /// Point `r ω_a` of node `a`.
    pub fn point(&self, a: usize) -> Vec<f64> {
        self.direction(a).iter().map(|w| w * self.radius).collect()
    }

    /// Same directions and weights on a sphere of another radius.
    pub fn rescaled(&self, radius: f64) -> Self {
        let s = (radius / self.radius).powi(self.dim as i32 - 1);
        Self {
            radius,
            nodes: self.nodes.clone(),
            weights: self.weights.iter().map(|w| w * s).collect(),
            ..*self
        }
    }

    /// `Σ_a w_a F(r ω_a)`, evaluated in parallel and summed pairwise.
    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let values = par_values(self.len(), |a| {
            let x = self.point(a);
            Ok(self.weights[a] * f(&x)?)
        })?;
        Ok(pairwise_sum(&values))
    }
}

fn unit_rule(dim: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    if dim == 2 {
        let k = 2 * order;
        let w = 2.0 * std::f64::consts::PI / k as f64;
        let mut nodes = Vec::with_capacity(2 * k);
        for j in 0..k {
            let (s, c) = (2.0 * std::f64::consts::PI * j as f64 / k as f64).sin_cos();
            nodes.push(c);
            nodes.push(s);
        }
        return (nodes, vec![w; k]);
    }
    let (lower_nodes, lower_weights) = unit_rule(dim - 1, order);
    let (t, tw) = gauss_gegenbauer(order, dim - 2);
    let lower_len = lower_weights.len();
    let mut nodes = Vec::with_capacity(order * lower_len * dim);
    let mut weights = Vec::with_capacity(order * lower_len);
    for (ti, twi) in t.iter().zip(&tw) {
        let s = (1.0 - ti * ti).sqrt();
        for b in 0..lower_len {
            nodes.push(*ti);
            nodes.extend(lower_nodes[b * (dim - 1)..(b + 1) * (dim - 1)].iter().map(|v| v * s));
            weights.push(twi * lower_weights[b]);
        }
    }
    (nodes, weights)
}

/// Pairwise (tree) summation, independent of how the terms were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        len if len <= 8 => values.iter().sum(),
        len => {
            let (a, b) = values.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Evaluates `f(0..len)` on the worker pool, preserving order.
pub fn par_values<F>(len: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    (0..len).into_par_iter().map(|a| f(a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_volumes() {
        assert!((unit_sphere_volume(2) - 4.0 * PI).abs() < 1e-15);
        assert!((unit_sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-14);
        assert!((unit_sphere_volume(4) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
        assert!((mass_constant(3) - 1.0 / (16.0 * PI)).abs() < 1e-18);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6, 0.0, 2.0);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(11)).sum();
        assert!((s - 2f64.powi(12) / 12.0).abs() < 1e-10);
    }

    #[test]
    fn gegenbauer_weight() {
        // ∫ t² √(1 − t²) dt = π/8
        let (t, w) = gauss_gegenbauer(5, 2);
        let s: f64 = t.iter().zip(&w).map(|(t, w)| w * t * t).sum();
        assert!((s - PI / 8.0).abs() < 1e-14);
    }

    #[test]
    fn spec_examples() {
        let total: f64 = SphereRule::new(3, 1.0, 16).unwrap().weights().iter().sum();
        assert!((total - 4.0 * PI).abs() <= 1e-12);
        let total: f64 = SphereRule::new(4, 2.0, 8).unwrap().weights().iter().sum();
        assert!((total - 16.0 * PI * PI).abs() <= 1e-10 * total);
        let rule = SphereRule::new(3, 1.0, 16).unwrap();
        let m = rule.integrate(|x| Ok(x[0] * x[0])).unwrap();
        assert!((m - 4.0 * PI / 3.0).abs() <= 1e-12);
        assert!(matches!(SphereRule::new(7, 1.0, 8), Err(Error::UnsupportedDimension(7))));
        assert!(SphereRule::new(3, 1.0, 3).is_err());
    }

    #[test]
    fn pairwise_sum_matches_serial_on_exact_values() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499500.0);
    }
}

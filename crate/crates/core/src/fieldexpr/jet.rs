//! Second-order truncated Taylor jets for forward-mode differentiation.

use super::{FieldError, MAX_VARS};

const MAX_PACKED: usize = MAX_VARS * (MAX_VARS + 1) / 2;

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

/// Value, gradient and Hessian of a scalar function at a point.
///
/// The Hessian is stored as its upper triangle, so it is symmetric by
/// construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    dim: usize,
    value: f64,
    grad: [f64; MAX_VARS],
    hess: [f64; MAX_PACKED],
}

impl Jet2 {
    pub fn constant(dim: usize, value: f64) -> Self {
        debug_assert!(dim <= MAX_VARS);
        Self {
            dim,
            value,
            grad: [0.0; MAX_VARS],
            hess: [0.0; MAX_PACKED],
        }
    }

    /// The coordinate function `x_index` evaluated at `value`.
    pub fn variable(dim: usize, index: usize, value: f64) -> Self {
        let mut jet = Self::constant(dim, value);
        jet.grad[index] = 1.0;
        jet
    }

    /// Jet of `|x|`. Fails at the origin, where the norm is not differentiable.
    pub fn radius(point: &[f64]) -> Result<Self, FieldError> {
        let dim = point.len();
        let r = point.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return Err(FieldError::Domain("r = |x| is not differentiable at the origin".into()));
        }
        let mut jet = Self::constant(dim, r);
        for i in 0..dim {
            jet.grad[i] = point[i] / r;
        }
        for j in 0..dim {
            for i in 0..=j {
                let delta = if i == j { 1.0 } else { 0.0 };
                jet.hess[packed(i, j)] = (delta - jet.grad[i] * jet.grad[j]) / r;
            }
        }
        Ok(jet)
    }

    /// Builds a jet from explicit derivative data. `hess` is read symmetrically.
    pub fn from_parts(value: f64, grad: &[f64], hess: impl Fn(usize, usize) -> f64) -> Self {
        let dim = grad.len();
        let mut jet = Self::constant(dim, value);
        jet.grad[..dim].copy_from_slice(grad);
        for j in 0..dim {
            for i in 0..=j {
                jet.hess[packed(i, j)] = hess(i, j);
            }
        }
        jet
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.value
    }

    #[inline]
    pub fn grad(&self) -> &[f64] {
        &self.grad[..self.dim]
    }

    #[inline]
    pub fn d(&self, i: usize) -> f64 {
        self.grad[i]
    }

    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[packed(i, j)]
    }

    pub fn hessian_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.hess(i, j)).collect())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad().iter().all(|v| v.is_finite())
            && self.hess[..self.packed_len()].iter().all(|v| v.is_finite())
    }

    #[inline]
    fn packed_len(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    /// Multiplies the gradient (and nothing else) by `factor`.
    pub fn with_scaled_gradient(mut self, factor: f64) -> Self {
        for g in &mut self.grad[..self.dim] {
            *g *= factor;
        }
        self
    }

    pub fn scale(mut self, factor: f64) -> Self {
        self.value *= factor;
        for g in &mut self.grad[..self.dim] {
            *g *= factor;
        }
        let len = self.packed_len();
        for h in &mut self.hess[..len] {
            *h *= factor;
        }
        self
    }

    /// Composition `g ∘ self` given `g`, `g'`, `g''` at `self.value()`.
    pub fn chain(&self, g0: f64, g1: f64, g2: f64) -> Self {
        let mut out = Self::constant(self.dim, g0);
        for i in 0..self.dim {
            out.grad[i] = g1 * self.grad[i];
        }
        for j in 0..self.dim {
            for i in 0..=j {
                let k = packed(i, j);
                out.hess[k] = g1 * self.hess[k] + g2 * self.grad[i] * self.grad[j];
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = *self;
        out.value += other.value;
        for i in 0..self.dim {
            out.grad[i] += other.grad[i];
        }
        for k in 0..self.packed_len() {
            out.hess[k] += other.hess[k];
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = *self;
        out.value -= other.value;
        for i in 0..self.dim {
            out.grad[i] -= other.grad[i];
        }
        for k in 0..self.packed_len() {
            out.hess[k] -= other.hess[k];
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = (self, other);
        let mut out = Self::constant(self.dim, a.value * b.value);
        for i in 0..self.dim {
            out.grad[i] = a.value * b.grad[i] + b.value * a.grad[i];
        }
        for j in 0..self.dim {
            for i in 0..=j {
                let k = packed(i, j);
                out.hess[k] = a.value * b.hess[k]
                    + b.value * a.hess[k]
                    + a.grad[i] * b.grad[j]
                    + a.grad[j] * b.grad[i];
            }
        }
        out
    }

    pub fn recip(&self) -> Result<Self, FieldError> {
        let v = self.value;
        if v == 0.0 {
            return Err(FieldError::Domain("division by zero".into()));
        }
        Ok(self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)))
    }

    pub fn div(&self, other: &Self) -> Result<Self, FieldError> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn sqrt(&self) -> Result<Self, FieldError> {
        let v = self.value;
        if v <= 0.0 {
            return Err(FieldError::Domain(format!("sqrt of non-positive value {v}")));
        }
        let s = v.sqrt();
        Ok(self.chain(s, 0.5 / s, -0.25 / (s * v)))
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Result<Self, FieldError> {
        let v = self.value;
        if v <= 0.0 {
            return Err(FieldError::Domain(format!("log of non-positive value {v}")));
        }
        Ok(self.chain(v.ln(), 1.0 / v, -1.0 / (v * v)))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn tanh(&self) -> Self {
        let t = self.value.tanh();
        let sech2 = 1.0 - t * t;
        self.chain(t, sech2, -2.0 * t * sech2)
    }

    /// `self^c` for a constant exponent.
    pub fn powf(&self, c: f64) -> Result<Self, FieldError> {
        let v = self.value;
        if c == 0.0 {
            return Ok(Self::constant(self.dim, 1.0));
        }
        if c == 1.0 {
            return Ok(*self);
        }
        if c.fract() == 0.0 && c.abs() < i32::MAX as f64 {
            let k = c as i32;
            if v == 0.0 && k < 2 {
                return Err(FieldError::Domain(format!("0 raised to the power {k}")));
            }
            let fk = k as f64;
            let g1 = if k == 1 { 1.0 } else { fk * v.powi(k - 1) };
            let g2 = match k {
                1 => 0.0,
                2 => 2.0,
                _ => fk * (fk - 1.0) * v.powi(k - 2),
            };
            return Ok(self.chain(v.powi(k), g1, g2));
        }
        if v < 0.0 || (v == 0.0 && c < 2.0) {
            return Err(FieldError::Domain(format!(
                "non-integer power {c} of value {v}"
            )));
        }
        let (g1, g2) = if v == 0.0 {
            (0.0, if c == 2.0 { 2.0 } else { 0.0 })
        } else {
            (c * v.powf(c - 1.0), c * (c - 1.0) * v.powf(c - 2.0))
        };
        Ok(self.chain(v.powf(c), g1, g2))
    }

    /// `self^other` with a non-constant exponent, via `exp(other · ln self)`.
    pub fn pow(&self, other: &Self) -> Result<Self, FieldError> {
        if self.value <= 0.0 {
            return Err(FieldError::Domain(format!(
                "variable exponent requires a positive base, got {}",
                self.value
            )));
        }
        Ok(other.mul(&self.ln()?).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_on_quadratic() {
        let x = Jet2::variable(2, 0, 1.0);
        let y = Jet2::variable(2, 1, 2.0);
        let f = x.mul(&x).add(&y.mul(&y));
        assert_eq!(f.value(), 5.0);
        assert_eq!(f.grad(), &[2.0, 4.0]);
        assert_eq!(f.hess(0, 0), 2.0);
        assert_eq!(f.hess(1, 1), 2.0);
        assert_eq!(f.hess(0, 1), 0.0);
    }

    #[test]
    fn radius_jet_matches_closed_form() {
        let r = Jet2::radius(&[0.0, 0.0, 2.0]).unwrap();
        assert_eq!(r.value(), 2.0);
        assert_eq!(r.grad(), &[0.0, 0.0, 1.0]);
        assert_eq!(r.hess(0, 0), 0.5);
        assert_eq!(r.hess(1, 1), 0.5);
        assert_eq!(r.hess(2, 2), 0.0);
        assert!(Jet2::radius(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn domain_errors() {
        let z = Jet2::constant(1, 0.0);
        assert!(z.recip().is_err());
        assert!(z.sqrt().is_err());
        assert!(z.ln().is_err());
        assert!(Jet2::constant(1, -1.0).powf(0.5).is_err());
        assert!(Jet2::constant(1, -2.0).powf(3.0).is_ok());
        assert!(Jet2::constant(1, 0.0).powf(2.0).is_ok());
    }

    #[test]
    fn powf_matches_repeated_multiplication() {
        let x = Jet2::variable(2, 0, 1.3).add(&Jet2::variable(2, 1, 0.4).scale(2.0));
        let cube = x.powf(3.0).unwrap();
        let manual = x.mul(&x).mul(&x);
        for i in 0..2 {
            assert!((cube.d(i) - manual.d(i)).abs() < 1e-12);
            for j in 0..2 {
                assert!((cube.hess(i, j) - manual.hess(i, j)).abs() < 1e-12);
            }
        }
    }
}

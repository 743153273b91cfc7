//! Limits `r → ∞` of ladder values through the model `m∞ + C r^{−p}`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative fit residual above which a ladder is declared not to stabilize.
pub const FIT_TOLERANCE: f64 = 0.05;

/// Smallest rate searched by the power-law fit.
pub const MIN_RATE: f64 = 0.3;

const ABSOLUTE_FLOOR: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    Constant,
    PowerLaw,
    Richardson,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Extrapolation {
    pub limit: f64,
    /// Fitted `p`; absent for constant data.
    pub rate: Option<f64>,
    pub coefficient: f64,
    /// Largest deviation of the data from the fitted model.
    pub residual: f64,
    pub error: f64,
    pub method: FitMethod,
}

/// Least-squares fit of `m∞ + C r^{−p}` with `p ∈ [MIN_RATE, max_rate]`.
///
/// Falls back to Richardson extrapolation on the last three rungs when the
/// optimum sits on the edge of the rate interval. The error is
/// `max(residual, ½|last − m∞|)`.
pub fn extrapolate(radii: &[f64], values: &[f64], max_rate: f64) -> Result<Extrapolation> {
    if radii.len() != values.len() {
        return Err(Error::InvalidInput("ladder radii and values differ in length".into()));
    }
    if radii.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "extrapolation needs at least 4 ladder points, got {}",
            radii.len()
        )));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(Error::InvalidInput("ladder radii must be positive and strictly increasing".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailure(format!("non-finite ladder values {values:?}")));
    }
    let last = *values.last().unwrap();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let spread = hi - lo;
    if spread <= (1e-12 * scale).max(ABSOLUTE_FLOOR) {
        return Ok(Extrapolation {
            limit: last,
            rate: None,
            coefficient: 0.0,
            residual: spread,
            error: spread,
            method: FitMethod::Constant,
        });
    }

    let fit = power_fit(radii, values, max_rate.max(MIN_RATE * 2.0));
    let result = match fit {
        Some((p, m, c)) => {
            let residual = max_deviation(radii, values, m, c, p);
            Extrapolation {
                limit: m,
                rate: Some(p),
                coefficient: c,
                residual,
                error: residual.max(0.5 * (last - m).abs()),
                method: FitMethod::PowerLaw,
            }
        }
        None => richardson(radii, values)?,
    };
    if result.residual > FIT_TOLERANCE * scale.max(ABSOLUTE_FLOOR) {
        return Err(Error::FitFailure(format!(
            "ladder values {values:?} do not follow m + C r^-p (residual {:.3e})",
            result.residual
        )));
    }
    Ok(result)
}

fn max_deviation(radii: &[f64], values: &[f64], m: f64, c: f64, p: f64) -> f64 {
    radii
        .iter()
        .zip(values)
        .map(|(r, v)| (v - m - c * r.powf(-p)).abs())
        .fold(0.0, f64::max)
}

/// `(m, C, SSE)` of the linear least-squares problem at fixed `p`.
fn linear_fit(radii: &[f64], values: &[f64], p: f64) -> Option<(f64, f64, f64)> {
    let k = radii.len() as f64;
    let u: Vec<f64> = radii.iter().map(|r| r.powf(-p)).collect();
    let ub = u.iter().sum::<f64>() / k;
    let vb = values.iter().sum::<f64>() / k;
    let suu: f64 = u.iter().map(|u| (u - ub).powi(2)).sum();
    if !(suu > 1e-24 * ub * ub) {
        return None;
    }
    let suv: f64 = u.iter().zip(values).map(|(u, v)| (u - ub) * (v - vb)).sum();
    let c = suv / suu;
    let m = vb - c * ub;
    let sse = u.iter().zip(values).map(|(u, v)| (v - m - c * u).powi(2)).sum();
    Some((m, c, sse))
}

fn power_fit(radii: &[f64], values: &[f64], max_rate: f64) -> Option<(f64, f64, f64)> {
    let sse = |p: f64| linear_fit(radii, values, p).map_or(f64::INFINITY, |f| f.2);
    let steps = 400;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| MIN_RATE + (max_rate - MIN_RATE) * i as f64 / steps as f64)
        .collect();
    let (best, _) = grid
        .iter()
        .enumerate()
        .map(|(i, p)| (i, sse(*p)))
        .fold((0, f64::INFINITY), |acc, (i, s)| if s < acc.1 { (i, s) } else { acc });
    if best == 0 || best == steps {
        return None;
    }
    let (mut a, mut b) = (grid[best - 1], grid[best + 1]);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (sse(c), sse(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * b.abs() {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = sse(d);
        }
    }
    let p = 0.5 * (a + b);
    let (m, c, _) = linear_fit(radii, values, p)?;
    Some((p, m, c))
}

fn richardson(radii: &[f64], values: &[f64]) -> Result<Extrapolation> {
    let k = values.len();
    let (v1, v2, v3) = (values[k - 3], values[k - 2], values[k - 1]);
    let (r1, r2, r3) = (radii[k - 3], radii[k - 2], radii[k - 1]);
    let ratio = r3 / r2;
    if ((r2 / r1) - ratio).abs() > 1e-9 * ratio {
        return Err(Error::FitFailure("Richardson extrapolation needs a geometric ladder".into()));
    }
    let (d1, d2) = (v2 - v1, v3 - v2);
    if d1 * d2 <= 0.0 || d2.abs() >= d1.abs() {
        return Err(Error::FitFailure(format!(
            "ladder values {values:?} are not converging monotonically"
        )));
    }
    let q = d1 / d2;
    let p = q.ln() / ratio.ln();
    let limit = v3 + d2 / (q - 1.0);
    let c = (v3 - limit) * r3.powf(p);
    let residual = max_deviation(radii, values, limit, c, p);
    Ok(Extrapolation {
        limit,
        rate: Some(p),
        coefficient: c,
        residual,
        error: residual.max(0.5 * (v3 - limit).abs()),
        method: FitMethod::Richardson,
    })
}

/// Least-squares slope of `ln |y|` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidInput("log-log fit needs two or more matching points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(v.abs() > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("log-log fit needs finite non-zero data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Geometric ladder `r₀ · ratio^k`, `k = 0 .. rungs`.
pub fn ladder_radii(r0: f64, ratio: f64, rungs: usize) -> Vec<f64> {
    (0..rungs).map(|k| r0 * ratio.powi(k as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let r = ladder_radii(16.0, 2.0, 5);
        let v: Vec<f64> = r.iter().map(|r| 3.0 + 5.0 / r).collect();
        let e = extrapolate(&r, &v, 6.0).unwrap();
        assert!((e.limit - 3.0).abs() <= 1e-8);
        assert!((e.rate.unwrap() - 1.0).abs() <= 1e-8);
        assert_eq!(e.method, FitMethod::PowerLaw);
    }

    #[test]
    fn constant_data() {
        let r = ladder_radii(16.0, 2.0, 5);
        let e = extrapolate(&r, &[0.25; 5], 6.0).unwrap();
        assert_eq!(e.limit, 0.25);
        assert_eq!(e.error, 0.0);
        assert_eq!(e.method, FitMethod::Constant);
    }

    #[test]
    fn schwarzschild_like_ladder() {
        let r = ladder_radii(16.0, 2.0, 5);
        let v: Vec<f64> = r.iter().map(|r| (1.0 + 0.5 / r).powi(3)).collect();
        let e = extrapolate(&r, &v, 6.0).unwrap();
        assert!((e.limit - 1.0).abs() <= 1e-3);
        assert!((e.rate.unwrap() - 1.0).abs() <= 0.1);
        assert!(e.error >= (e.limit - 1.0).abs());
    }

    #[test]
    fn slow_rate_falls_back_to_richardson() {
        let r = ladder_radii(16.0, 2.0, 5);
        let v: Vec<f64> = r.iter().map(|r| 2.0 - r.powf(-0.1)).collect();
        let e = extrapolate(&r, &v, 6.0).unwrap();
        assert_eq!(e.method, FitMethod::Richardson);
        assert!((e.rate.unwrap() - 0.1).abs() <= 1e-9);
        assert!((e.limit - 2.0).abs() <= 1e-9);
    }

    #[test]
    fn oscillating_data_fails() {
        let r = ladder_radii(16.0, 2.0, 5);
        let v = [1.0, -1.0, 1.0, -1.0, 1.0];
        assert!(matches!(extrapolate(&r, &v, 6.0), Err(Error::FitFailure(_))));
        assert!(extrapolate(&r[..3], &v[..3], 6.0).is_err());
    }

    #[test]
    fn slope_of_power() {
        let x = [16.0, 32.0, 64.0];
        let y: Vec<f64> = x.iter().map(|x: &f64| 7.0 * x.powf(-2.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() + 2.5).abs() < 1e-12);
    }
}

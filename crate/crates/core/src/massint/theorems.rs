//! End-to-end checks of the mass formulas and the Penrose bound.

use serde::Serialize;

use super::integrals::{
    adm_mass_graph, boundary_area, boundary_integral, bulk_integral, exact_flux, BulkIntegral, BulkIntegrand,
    GraphMass,
};
use super::quadrature::{mass_constant, unit_sphere_volume};
use super::LadderConfig;
use crate::ambient::sample_rays;
use crate::error::{Error, Result};
use crate::hypersurface::GraphSpec;

/// Both sides of `m_g − m_h = boundary + c_n ∫ density dM`.
#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub integrand: BulkIntegrand,
    pub m_g: f64,
    pub m_h: f64,
    pub boundary: f64,
    pub bulk: BulkIntegral,
    /// `c_n` times the bulk integral.
    pub bulk_term: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub masses: GraphMass,
    pub diagnostics: Vec<String>,
}

/// Largest Ricci component sampled on rays between the inner radius and the
/// top rung, relative to the metric's own scale.
fn max_ambient_ricci(spec: &GraphSpec, cfg: &LadderConfig) -> Result<f64> {
    let n = spec.dim();
    let r_min = spec.min_radius().max(0.25);
    let mut worst: f64 = 0.0;
    let mut r = r_min;
    while r <= cfg.outer() {
        for ray in sample_rays(n) {
            let x: Vec<f64> = ray.iter().map(|w| w * r).collect();
            let (ric, scalar) = spec.ambient.ricci(&x)?;
            worst = ric.iter().fold(worst, |m, v| m.max(v.abs())).max(scalar.abs());
        }
        r *= 2.0;
    }
    Ok(worst)
}

/// Fails with `HypothesisViolated` when the ambient does not satisfy the
/// assumptions behind `integrand`.
pub fn check_hypotheses(spec: &GraphSpec, integrand: BulkIntegrand, cfg: &LadderConfig) -> Result<()> {
    match integrand {
        BulkIntegrand::General => Ok(()),
        BulkIntegrand::Product if spec.ambient.is_product() => Ok(()),
        BulkIntegrand::Product => Err(Error::HypothesisViolated(
            "the product form needs φ ≡ 1".into(),
        )),
        BulkIntegrand::RicciFlat => {
            let worst = max_ambient_ricci(spec, cfg)?;
            if worst > 1e-8 {
                Err(Error::HypothesisViolated(format!(
                    "the ambient is not Ricci-flat: sampled |Ric| reaches {worst:.3e}"
                )))
            } else {
                Ok(())
            }
        }
    }
}

/// Inner boundary contribution: `c_n ∫_Γ φ s₁(μ)` at a horizon, the exact
/// flux of `GXᵀ` through an excised sphere, zero without a boundary.
pub(crate) fn inner_term(spec: &GraphSpec, order: usize) -> Result<f64> {
    match &spec.boundary {
        None => Ok(0.0),
        Some(b) if b.orthogonal => boundary_integral(spec, b.radius, order),
        Some(b) => exact_flux(spec, b.radius, order),
    }
}

/// Computes `m_g`, `m_h`, the boundary term and the bulk term independently
/// and compares them. The tolerance is 1% of `max(|m_g|, 0.1)`.
pub fn verify_mass_theorem(spec: &GraphSpec, integrand: BulkIntegrand, cfg: &LadderConfig) -> Result<TheoremReport> {
    check_hypotheses(spec, integrand, cfg)?;
    let n = spec.dim();
    let masses = adm_mass_graph(spec, cfg)?;
    let boundary = inner_term(spec, cfg.sphere_order)?;
    let bulk = bulk_integral(spec, spec.min_radius(), cfg.outer(), integrand, cfg, true, &[])?;
    let (m_g, m_h) = (masses.m_g.limit(), masses.m_h.limit());
    let bulk_term = mass_constant(n) * bulk.value;
    let lhs = m_g - m_h;
    let rhs = boundary + bulk_term;
    let residual = (lhs - rhs).abs();
    let tolerance = 0.01 * m_g.abs().max(0.1);
    let mut diagnostics = vec![
        format!("m_g fit error {:.3e}, m_h fit error {:.3e}", masses.m_g.error(), masses.m_h.error()),
        format!("bulk tail {:.3e}, bulk error {:.3e}", bulk.tail, bulk.error),
    ];
    if let Some(b) = &spec.boundary {
        diagnostics.push(format!(
            "inner boundary at {} ({})",
            b.radius,
            if b.orthogonal { "horizon" } else { "excised" }
        ));
    }
    Ok(TheoremReport {
        integrand,
        m_g,
        m_h,
        boundary,
        bulk_term,
        lhs,
        rhs,
        residual,
        tolerance,
        passed: residual <= tolerance,
        bulk,
        masses,
        diagnostics,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PenroseReport {
    pub m_g: f64,
    pub m_h: f64,
    pub area: f64,
    /// `m_h + ½(A/ω_{n−1})^{(n−2)/(n−1)}`.
    pub bound: f64,
    pub margin: f64,
    /// The inequality is claimed only when `Γ` is a horizon.
    pub asserted: bool,
}

pub fn penrose_check(spec: &GraphSpec, rho: f64, cfg: &LadderConfig) -> Result<PenroseReport> {
    let masses = adm_mass_graph(spec, cfg)?;
    penrose_check_with(spec, rho, &masses, cfg)
}

/// [`penrose_check`] reusing an existing mass computation.
pub fn penrose_check_with(spec: &GraphSpec, rho: f64, masses: &GraphMass, cfg: &LadderConfig) -> Result<PenroseReport> {
    let n = spec.dim();
    if spec.boundary.is_none() {
        return Err(Error::InvalidInput("the Penrose check needs an inner boundary".into()));
    }
    let area = boundary_area(spec, rho, cfg.sphere_order)?;
    let nf = n as f64;
    let bound = masses.m_h.limit() + 0.5 * (area / unit_sphere_volume(n - 1)).powf((nf - 2.0) / (nf - 1.0));
    let asserted = spec
        .boundary
        .as_ref()
        .is_some_and(|b| b.orthogonal && (b.radius - rho).abs() <= 1e-12 * rho);
    Ok(PenroseReport {
        m_g: masses.m_g.limit(),
        m_h: masses.m_h.limit(),
        area,
        bound,
        margin: masses.m_g.limit() - bound,
        asserted,
    })
}

//! Quasi-local mass of the region inside a coordinate sphere.

use serde::{Deserialize, Serialize};

use super::extrapolate::Extrapolation;
use super::integrals::{adm_mass_graph, bulk_integral, BulkIntegrand};
use super::quadrature::{mass_constant, pairwise_sum, par_values, SphereRule};
use super::theorems::inner_term;
use super::{LadderConfig, MassLadder};
use crate::error::{Error, Result};
use crate::hypersurface::{boundary_sample, GraphSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuasiLocalMethod {
    Boundary,
    Bulk,
}

/// Shape of the compact piece `D` enclosed by `Γ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuasiLocalRegion {
    /// `D = {|x| ≤ ρ}`; `f` must be smooth inside.
    Ball,
    /// `D` between the inner boundary and `Γ`.
    Annulus,
}

fn check_region(spec: &GraphSpec, region: QuasiLocalRegion, rho: f64) -> Result<f64> {
    match (region, &spec.boundary) {
        (QuasiLocalRegion::Ball, None) => Ok(0.0),
        (QuasiLocalRegion::Annulus, Some(b)) if rho > spec.min_radius() => Ok(b.radius),
        (QuasiLocalRegion::Annulus, Some(b)) => Err(Error::InvalidInput(format!(
            "Γ at radius {rho} does not enclose the inner boundary at {}",
            b.radius
        ))),
        (QuasiLocalRegion::Ball, Some(_)) => Err(Error::InvalidInput(
            "a ball region was declared but the graph has an inner boundary".into(),
        )),
        (QuasiLocalRegion::Annulus, None) => Err(Error::InvalidInput(
            "an annulus region was declared but the graph has no inner boundary".into(),
        )),
    }
}

/// `c_n ∫_Γ ⟨X, ξ⟩ (s₁(μ)² − s₁(η)²)/s₁(μ) dΓ` with `⟨X, ξ⟩ = φ`.
fn boundary_functional(spec: &GraphSpec, rho: f64, order: usize) -> Result<f64> {
    let n = spec.dim();
    let rule = SphereRule::new(n, rho, order)?;
    let f0 = spec.f.value(&rule.point(0))?;
    let terms = par_values(rule.len(), |a| {
        let x = rule.point(a);
        if (spec.f.value(&x)? - f0).abs() > 1e-9 * f0.abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "Γ = {{|x| = {rho}}} does not lie in a slice"
            )));
        }
        let s = boundary_sample(spec, &x)?;
        if s.s1_mu.abs() < 1e-8 {
            return Err(Error::DegenerateBoundary(format!(
                "s₁(μ) = {:.3e} at {:?}",
                s.s1_mu, s.point
            )));
        }
        let density = s.phi * (s.s1_mu * s.s1_mu - s.s1_eta * s.s1_eta) / s.s1_mu;
        Ok(rule.weights()[a] * density * s.area_factor)
    })?;
    Ok(mass_constant(n) * pairwise_sum(&terms))
}

/// Quasi-local mass of `Γ = {|x| = ρ}`.
///
/// The boundary method evaluates the functional on `Γ`; the bulk method adds
/// the inner boundary term (if any) to `c_n ∫_D (2S₂Θ + Ric_ḡ(N, Xᵀ)) dM`.
pub fn quasilocal_mass(
    spec: &GraphSpec,
    rho: f64,
    method: QuasiLocalMethod,
    region: QuasiLocalRegion,
    cfg: &LadderConfig,
) -> Result<f64> {
    let r_inner = check_region(spec, region, rho)?;
    match method {
        QuasiLocalMethod::Boundary => boundary_functional(spec, rho, cfg.sphere_order),
        QuasiLocalMethod::Bulk => {
            let start = if r_inner > 0.0 { spec.min_radius() } else { 0.0 };
            let bulk = bulk_integral(spec, start, rho, BulkIntegrand::General, cfg, false, &[])?;
            Ok(inner_term(spec, cfg.sphere_order)? + mass_constant(spec.dim()) * bulk.value)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiLocalConvergence {
    pub ladder: MassLadder,
    /// `m_g − m_h` from the mass ladders.
    pub target: f64,
    pub target_error: f64,
    pub difference: f64,
    pub passed: bool,
}

impl QuasiLocalConvergence {
    pub fn fit(&self) -> &Extrapolation {
        &self.ladder.fit
    }
}

/// Boundary-method values on the mass ladder radii, extrapolated and
/// compared with `m_g − m_h` within the combined fit errors.
pub fn quasilocal_convergence(
    spec: &GraphSpec,
    region: QuasiLocalRegion,
    cfg: &LadderConfig,
) -> Result<QuasiLocalConvergence> {
    let radii = cfg.radii();
    let values = radii
        .iter()
        .map(|&r| quasilocal_mass(spec, r, QuasiLocalMethod::Boundary, region, cfg))
        .collect::<Result<Vec<_>>>()?;
    let ladder = MassLadder::new("m_QL", radii, values, 2.0 * spec.dim() as f64)?;
    let masses = adm_mass_graph(spec, cfg)?;
    let target = masses.m_g.limit() - masses.m_h.limit();
    let target_error = masses.m_g.error() + masses.m_h.error();
    let difference = (ladder.limit() - target).abs();
    let allowed = ladder.error() + target_error + 1e-9 * target.abs().max(1.0);
    Ok(QuasiLocalConvergence {
        passed: difference <= allowed,
        ladder,
        target,
        target_error,
        difference,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityReport {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Every sampled density was nonnegative.
    pub nonnegative: bool,
    pub min_density: f64,
    pub monotone: bool,
}

/// Bulk-method quasi-local masses on nested spheres from one shell sweep.
pub fn quasilocal_monotonicity(
    spec: &GraphSpec,
    region: QuasiLocalRegion,
    radii: &[f64],
    cfg: &LadderConfig,
) -> Result<MonotonicityReport> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("radii must be nonempty and strictly increasing".into()));
    }
    let r_inner = check_region(spec, region, radii[0])?;
    let start = if r_inner > 0.0 { spec.min_radius() } else { 0.0 };
    let outer = *radii.last().unwrap();
    let bulk = bulk_integral(spec, start, outer, BulkIntegrand::General, cfg, false, radii)?;
    let inner = inner_term(spec, cfg.sphere_order)?;
    let c = mass_constant(spec.dim());
    let values: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let (_, v) = bulk
                .cumulative
                .iter()
                .find(|(b, _)| (b - r).abs() <= 1e-12 * r.max(1.0))
                .expect("ladder radii are shell boundaries");
            inner + c * v
        })
        .collect();
    let slack = 1e-12 * values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let monotone = values.windows(2).all(|w| w[1] >= w[0] - slack);
    Ok(MonotonicityReport {
        radii: radii.to_vec(),
        values,
        nonnegative: bulk.nonnegative,
        min_density: bulk.min_density,
        monotone,
    })
}

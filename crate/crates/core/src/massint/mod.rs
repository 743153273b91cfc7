//! Quadrature, mass functionals and the verifiers built on them.

mod extrapolate;
mod integrals;
mod quadrature;
mod quasilocal;
mod theorems;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use extrapolate::{extrapolate, ladder_radii, loglog_slope, Extrapolation, FitMethod, FIT_TOLERANCE, MIN_RATE};
pub use integrals::{
    adm_integrand, adm_mass_end, adm_mass_graph, adm_surface_integral, boundary_area, boundary_integral,
    bulk_integral, discarded_terms, exact_flux, flux_integral, flux_ladder, graph_correction_integral,
    mass_integrands, BulkIntegral, BulkIntegrand, GraphMass, MassIntegrands,
};
pub use quadrature::{
    gauss_gegenbauer, gauss_legendre, mass_constant, pairwise_sum, unit_sphere_volume, SphereRule, MAX_SPHERE_DIM,
};
pub use quasilocal::{
    quasilocal_convergence, quasilocal_mass, quasilocal_monotonicity, MonotonicityReport, QuasiLocalConvergence,
    QuasiLocalMethod, QuasiLocalRegion,
};
pub use theorems::{check_hypotheses, penrose_check, penrose_check_with, verify_mass_theorem, PenroseReport, TheoremReport};

/// Radii and quadrature orders shared by every ladder computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LadderConfig {
    pub r0: f64,
    pub ratio: f64,
    pub rungs: usize,
    pub sphere_order: usize,
    pub radial_order: usize,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self::for_dim(3)
    }
}

impl LadderConfig {
    pub fn for_dim(n: usize) -> Self {
        let sphere_order = match n {
            0..=2 => 32,
            3 => 24,
            4 => 16,
            5 => 12,
            _ => 8,
        };
        Self {
            r0: 16.0,
            ratio: 2.0,
            rungs: 5,
            sphere_order,
            radial_order: 12,
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        ladder_radii(self.r0, self.ratio, self.rungs)
    }

    /// Top rung, used as the truncation radius of bulk integrals.
    pub fn outer(&self) -> f64 {
        self.r0 * self.ratio.powi(self.rungs as i32 - 1)
    }
}

/// Per-radius values of a surface integral with their extrapolated limit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassLadder {
    pub label: String,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub fit: Extrapolation,
}

impl MassLadder {
    pub fn new(label: &str, radii: Vec<f64>, values: Vec<f64>, max_rate: f64) -> Result<Self> {
        let fit = extrapolate(&radii, &values, max_rate)?;
        Ok(Self {
            label: label.to_string(),
            radii,
            values,
            fit,
        })
    }

    pub fn limit(&self) -> f64 {
        self.fit.limit
    }

    pub fn error(&self) -> f64 {
        self.fit.error
    }
}

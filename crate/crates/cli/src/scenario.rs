//! Scenario files: a model, ladder settings and the verifications to run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use warpmass::hypersurface::{graph_jet, GraphSpec};
use warpmass::massint::{check_hypotheses, BulkIntegrand, LadderConfig, QuasiLocalRegion};
use warpmass::models::ModelSpec;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Seeds the random samples of the identity suite.
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSpec,
    /// Omitted fields take the defaults for the model dimension.
    #[serde(default)]
    pub ladder: Option<LadderConfig>,
    #[serde(rename = "verify")]
    pub verifications: Vec<Verification>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Verification {
    /// `m_g` and `m_h` ladders; optional expected `m_g`.
    Masses {
        #[serde(default)]
        expected: Option<f64>,
        #[serde(default = "percent")]
        tolerance: f64,
    },
    /// The flux ladder against `m_g − m_h` within the combined fit errors.
    Flux {
        #[serde(default)]
        tolerance: f64,
    },
    /// The mass identity with the chosen bulk density; the tolerance is
    /// relative to `max(|m_g|, 0.1)`.
    Theorem {
        #[serde(default = "general")]
        integrand: BulkIntegrand,
        #[serde(default = "percent")]
        tolerance: f64,
    },
    /// Penrose bound at `Γ = {|x| = rho}` (the inner boundary by default).
    /// With `equality` the margin must vanish, otherwise be nonnegative.
    Penrose {
        #[serde(default)]
        rho: Option<f64>,
        #[serde(default)]
        equality: bool,
        #[serde(default = "percent")]
        tolerance: f64,
    },
    /// Boundary and bulk quasi-local masses on `radii`, their monotonicity,
    /// and the convergence of the boundary ladder to `m_g − m_h`.
    Quasilocal {
        region: QuasiLocalRegion,
        radii: Vec<f64>,
        #[serde(default = "agreement")]
        tolerance: f64,
    },
    /// The pointwise identities on random samples in the model dimension.
    Identities {
        #[serde(default = "hundred")]
        samples: usize,
    },
}

fn percent() -> f64 {
    0.01
}

fn agreement() -> f64 {
    1e-4
}

fn general() -> BulkIntegrand {
    BulkIntegrand::General
}

fn hundred() -> usize {
    100
}

impl Verification {
    pub fn kind(&self) -> &'static str {
        match self {
            Verification::Masses { .. } => "masses",
            Verification::Flux { .. } => "flux",
            Verification::Theorem { .. } => "theorem",
            Verification::Penrose { .. } => "penrose",
            Verification::Quasilocal { .. } => "quasilocal",
            Verification::Identities { .. } => "identities",
        }
    }

    fn tolerance(&self) -> Option<f64> {
        match self {
            Verification::Masses { tolerance, .. }
            | Verification::Flux { tolerance }
            | Verification::Theorem { tolerance, .. }
            | Verification::Penrose { tolerance, .. }
            | Verification::Quasilocal { tolerance, .. } => Some(*tolerance),
            Verification::Identities { .. } => None,
        }
    }
}

/// A scenario that passed validation, with its graph built.
pub struct Prepared {
    pub scenario: Scenario,
    pub ladder: LadderConfig,
    pub spec: GraphSpec,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Validation {
        path: path.into(),
        message: message.into(),
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            invalid(if path == "." { String::new() } else { path }, inner.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Builds the model, evaluates it at a probe point and runs the
    /// hypothesis pre-checks of every requested theorem.
    pub fn prepare(self) -> Result<Prepared, CliError> {
        if self.verifications.is_empty() {
            return Err(invalid("verify", "no verifications requested"));
        }
        for (k, v) in self.verifications.iter().enumerate() {
            if let Some(t) = v.tolerance() {
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(invalid(format!("verify[{k}].tolerance"), "must be finite and nonnegative"));
                }
            }
            match v {
                Verification::Quasilocal { radii, .. } => {
                    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
                        return Err(invalid(
                            format!("verify[{k}].radii"),
                            "must be positive and strictly increasing",
                        ));
                    }
                }
                Verification::Identities { samples } if *samples == 0 => {
                    return Err(invalid(format!("verify[{k}].samples"), "must be positive"));
                }
                _ => {}
            }
        }
        let ladder = self.ladder.clone().unwrap_or_else(|| LadderConfig::for_dim(self.model.dim));
        if ladder.rungs < 4 || !(ladder.r0 > 0.0) || !(ladder.ratio > 1.0) {
            return Err(invalid("ladder", "needs r0 > 0, ratio > 1 and at least 4 rungs"));
        }
        let spec = self.model.build().map_err(|e| invalid("model", e.to_string()))?;
        let n = spec.dim();
        let r = (2.0 * spec.min_radius()).max(2.0);
        let probe: Vec<f64> = vec![r / (n as f64).sqrt(); n];
        graph_jet(&spec, &probe).map_err(|e| invalid("model", format!("evaluation at the probe point {probe:?} failed: {e}")))?;
        for (k, v) in self.verifications.iter().enumerate() {
            match v {
                Verification::Theorem { integrand, .. } => {
                    check_hypotheses(&spec, *integrand, &ladder).map_err(|e| CliError::Hypothesis {
                        path: format!("verify[{k}].integrand"),
                        message: e.to_string(),
                    })?;
                }
                Verification::Penrose { rho: None, .. } if spec.boundary.is_none() => {
                    return Err(invalid(format!("verify[{k}].rho"), "required when the model has no inner boundary"));
                }
                _ => {}
            }
        }
        Ok(Prepared {
            scenario: Scenario {
                ladder: Some(ladder.clone()),
                ..self
            },
            ladder,
            spec,
        })
    }
}

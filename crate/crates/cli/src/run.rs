//! Executes the verifications of a prepared scenario.

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use warpmass::massint::{
    adm_mass_graph, flux_ladder, penrose_check_with, quasilocal_convergence, quasilocal_mass, quasilocal_monotonicity,
    verify_mass_theorem, MassLadder, QuasiLocalMethod,
};
use warpmass::suite::identities;

use crate::emit::{emit_convergence_plot_data, emit_ladder_table, ladder_stem};
use crate::scenario::{Prepared, Scenario, Verification};
use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

/// One comparison against a tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub passed: bool,
}

impl CheckRow {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("<= {limit:.3e}"),
            passed: value <= limit,
        }
    }

    fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!(">= {limit:.3e}"),
            passed: value >= limit,
        }
    }

    fn holds(name: &str, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            bound: "true".into(),
            passed: ok,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationResult {
    pub index: usize,
    pub kind: &'static str,
    pub passed: bool,
    pub checks: Vec<CheckRow>,
    /// The full report of the underlying operation.
    pub data: Value,
    /// Stems of the ladder tables and plot files written for this entry.
    pub ladders: Vec<String>,
    pub error: Option<String>,
}

/// Wall-clock information, kept apart from the reproducible numbers.
#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub started_unix: f64,
    pub finished_unix: f64,
    pub seconds: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: ToolInfo,
    /// The scenario with every default filled in.
    pub scenario: Scenario,
    pub tolerance_scale: f64,
    pub passed: bool,
    pub results: Vec<VerificationResult>,
    pub timing: Timing,
}

impl RunReport {
    pub fn has_errors(&self) -> bool {
        self.results.iter().any(|r| r.error.is_some())
    }

    /// Pretty JSON of everything except the timing field.
    pub fn reproducible_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        v.as_object_mut().unwrap().remove("timing");
        serde_json::to_string_pretty(&v).expect("reports serialize")
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

struct Outcome {
    checks: Vec<CheckRow>,
    data: Value,
    ladders: Vec<MassLadder>,
}

fn evaluate(p: &Prepared, v: &Verification, scale: f64) -> warpmass::Result<Outcome> {
    let (spec, cfg) = (&p.spec, &p.ladder);
    match v {
        Verification::Masses { expected, tolerance } => {
            let masses = adm_mass_graph(spec, cfg)?;
            let checks = expected
                .map(|m| vec![CheckRow::at_most("|m_g - expected|", (masses.m_g.limit() - m).abs(), tolerance * scale)])
                .unwrap_or_default();
            Ok(Outcome {
                checks,
                data: json(&masses),
                ladders: vec![masses.m_g.clone(), masses.m_h.clone(), masses.correction.clone()],
            })
        }
        Verification::Flux { tolerance } => {
            let masses = adm_mass_graph(spec, cfg)?;
            let flux = flux_ladder(spec, cfg)?;
            let gap = (flux.limit() - masses.correction.limit()).abs();
            let allowed = flux.error() + masses.correction.error() + tolerance * scale;
            Ok(Outcome {
                checks: vec![CheckRow::at_most("|flux - (m_g - m_h)|", gap, allowed)],
                data: serde_json::json!({ "flux": flux, "masses": masses }),
                ladders: vec![flux, masses.correction],
            })
        }
        Verification::Theorem { integrand, tolerance } => {
            let report = verify_mass_theorem(spec, *integrand, cfg)?;
            let limit = tolerance * report.m_g.abs().max(0.1) * scale;
            Ok(Outcome {
                checks: vec![CheckRow::at_most("|lhs - rhs|", report.residual, limit)],
                ladders: vec![report.masses.m_g.clone(), report.masses.m_h.clone()],
                data: json(&report),
            })
        }
        Verification::Penrose { rho, equality, tolerance } => {
            let rho = rho.unwrap_or_else(|| spec.boundary.as_ref().map(|b| b.radius).unwrap_or(0.0));
            let masses = adm_mass_graph(spec, cfg)?;
            let report = penrose_check_with(spec, rho, &masses, cfg)?;
            let t = tolerance * scale;
            let checks = match (report.asserted, equality) {
                (false, _) => Vec::new(),
                (true, true) => vec![CheckRow::at_most("|margin|", report.margin.abs(), t)],
                (true, false) => vec![CheckRow::at_least("margin", report.margin, -t)],
            };
            Ok(Outcome {
                checks,
                data: json(&report),
                ladders: vec![masses.m_g, masses.m_h],
            })
        }
        Verification::Quasilocal { region, radii, tolerance } => {
            let boundary = radii
                .iter()
                .map(|&r| quasilocal_mass(spec, r, QuasiLocalMethod::Boundary, *region, cfg))
                .collect::<warpmass::Result<Vec<_>>>()?;
            let mono = quasilocal_monotonicity(spec, *region, radii, cfg)?;
            let gap = boundary
                .iter()
                .zip(&mono.values)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            let conv = quasilocal_convergence(spec, *region, cfg)?;
            let mut checks = vec![CheckRow::at_most("max |boundary - bulk|", gap, tolerance * scale)];
            if mono.nonnegative {
                checks.push(CheckRow::holds("bulk masses nondecreasing", mono.monotone));
            }
            checks.push(CheckRow::at_most(
                "|m_QL limit - (m_g - m_h)|",
                conv.difference,
                conv.ladder.error() + conv.target_error + 1e-9 * conv.target.abs().max(1.0),
            ));
            Ok(Outcome {
                checks,
                data: serde_json::json!({
                    "radii": radii,
                    "boundary": boundary,
                    "bulk": mono.values,
                    "nonnegative": mono.nonnegative,
                    "min_density": mono.min_density,
                    "monotone": mono.monotone,
                    "convergence": conv,
                }),
                ladders: vec![conv.ladder.clone()],
            })
        }
        Verification::Identities { samples } => {
            let report = identities(spec.dim(), p.scenario.seed, *samples, scale)?;
            let checks = report
                .rows
                .iter()
                .map(|r| CheckRow::at_most(&r.name, r.max, r.tolerance))
                .collect();
            Ok(Outcome {
                checks,
                data: json(&report),
                ladders: Vec::new(),
            })
        }
    }
}

/// Runs every verification in order. Operation failures are recorded in the
/// report; only I/O on `out` aborts the run.
pub fn run_scenario(p: &Prepared, tolerance_scale: f64, out: Option<&Path>) -> Result<RunReport, CliError> {
    let started_unix = unix_now();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    let mut results = Vec::new();
    let mut seconds = Vec::new();
    for (index, v) in p.scenario.verifications.iter().enumerate() {
        let start = Instant::now();
        let outcome = evaluate(p, v, tolerance_scale);
        seconds.push(start.elapsed().as_secs_f64());
        let result = match outcome {
            Ok(o) => {
                let mut stems = Vec::new();
                for ladder in &o.ladders {
                    let stem = ladder_stem(index, v.kind(), &ladder.label);
                    if let Some(dir) = out {
                        emit_ladder_table(ladder, &dir.join(format!("{stem}.csv")))?;
                        emit_convergence_plot_data(ladder, &dir.join(format!("{stem}.dat")))?;
                    }
                    stems.push(stem);
                }
                VerificationResult {
                    index,
                    kind: v.kind(),
                    passed: o.checks.iter().all(|c| c.passed),
                    checks: o.checks,
                    data: o.data,
                    ladders: stems,
                    error: None,
                }
            }
            Err(e) => VerificationResult {
                index,
                kind: v.kind(),
                passed: false,
                checks: Vec::new(),
                data: Value::Null,
                ladders: Vec::new(),
                error: Some(format!("scenario `{}`, verify[{index}] ({}): {e}", p.scenario.name, v.kind())),
            },
        };
        results.push(result);
    }
    Ok(RunReport {
        tool: ToolInfo {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        },
        scenario: p.scenario.clone(),
        tolerance_scale,
        passed: results.iter().all(|r| r.passed),
        results,
        timing: Timing {
            started_unix,
            finished_unix: unix_now(),
            seconds,
        },
    })
}

//! Scenario runner behind the `warpmass` command.

mod emit;
mod run;
mod scenario;

pub use emit::{emit_convergence_plot_data, emit_ladder_table, ladder_stem, FIT_SAMPLES};
pub use run::{run_scenario, RunReport, Timing, ToolInfo, VerificationResult};
pub use scenario::{Prepared, Scenario, Verification};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid scenario at `{path}`: {message}")]
    Validation { path: String, message: String },
    #[error("hypothesis check failed at `{path}`: {message}")]
    Hypothesis { path: String, message: String },
    #[error("{0}")]
    Io(String),
}

/// Exit statuses of the command.
pub mod exit {
    pub const OK: i32 = 0;
    /// A residual exceeded its tolerance.
    pub const TOLERANCE: i32 = 1;
    /// The scenario was rejected before any computation.
    pub const INVALID: i32 = 2;
    /// An operation failed while the scenario ran.
    pub const COMPUTATION: i32 = 3;
}

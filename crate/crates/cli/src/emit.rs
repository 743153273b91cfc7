//! Ladder tables and plot data.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use warpmass::massint::MassLadder;

use crate::CliError;

/// Samples of the fitted curve written after the data lines.
pub const FIT_SAMPLES: usize = 50;

fn number(v: f64) -> String {
    format!("{v:.15e}")
}

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn fitted(ladder: &MassLadder, r: f64) -> f64 {
    let fit = &ladder.fit;
    match fit.rate {
        Some(p) => fit.limit + fit.coefficient * r.powf(-p),
        None => fit.limit,
    }
}

/// Writes `r value` pairs for the ladder, then [`FIT_SAMPLES`] pairs of the
/// fitted curve on geometrically spaced radii across the same range.
pub fn emit_convergence_plot_data(ladder: &MassLadder, path: &Path) -> Result<(), CliError> {
    if ladder.radii.is_empty() {
        return Err(CliError::Io(format!("{}: ladder `{}` is empty", path.display(), ladder.label)));
    }
    let mut out = BufWriter::new(File::create(path).map_err(|e| io(path, e))?);
    let mut lines = String::new();
    for (r, v) in ladder.radii.iter().zip(&ladder.values) {
        lines.push_str(&format!("{} {}\n", number(*r), number(*v)));
    }
    let (lo, hi) = (ladder.radii[0], *ladder.radii.last().unwrap());
    for k in 0..FIT_SAMPLES {
        let t = k as f64 / (FIT_SAMPLES - 1) as f64;
        let r = lo * (hi / lo).powf(t);
        lines.push_str(&format!("{} {}\n", number(r), number(fitted(ladder, r))));
    }
    out.write_all(lines.as_bytes()).map_err(|e| io(path, e))?;
    out.flush().map_err(|e| io(path, e))
}

/// Comma-separated `r,value` table with a header row.
pub fn emit_ladder_table(ladder: &MassLadder, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io(path, e))?;
    w.write_record(["r", "value"]).map_err(|e| io(path, e))?;
    for (r, v) in ladder.radii.iter().zip(&ladder.values) {
        w.write_record([number(*r), number(*v)]).map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

/// File stem for a ladder: lowercase alphanumerics, the rest folded to `_`.
pub fn ladder_stem(index: usize, kind: &str, label: &str) -> String {
    let mut s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    while s.contains("__") {
        s = s.replace("__", "_");
    }
    format!("{index:02}-{kind}-{}", s.trim_matches('_'))
}

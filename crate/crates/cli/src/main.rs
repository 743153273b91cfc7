use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use warpmass::models::registry;
use warpmass::suite::{identities, run_criterion, criterion_count, SuiteOptions};
use warpmass_cli::{exit, run_scenario, CliError, Scenario};

#[derive(Parser)]
#[command(name = "warpmass", version, about = "Mass verifications for graphs in warped products")]
struct Cli {
    /// Directory for reports, ladder tables and plot data.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Multiplies every tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verifications of a scenario file.
    Run { scenario: PathBuf },
    #[command(subcommand)]
    Suite(Suite),
    /// List the named model families.
    Registry {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum Suite {
    /// Pointwise identities on random samples.
    Identities {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = SuiteOptions::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// The full acceptance suite, one line per criterion.
    Acceptance {
        #[arg(long, default_value_t = SuiteOptions::default().seed)]
        seed: u64,
    },
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn run(cli: &Cli, path: &Path) -> Result<i32, CliError> {
    let prepared = match Scenario::load(path).and_then(|s| s.prepare()) {
        Ok(p) => p,
        Err(e @ CliError::Io(_)) => return Err(e),
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(exit::INVALID);
        }
    };
    let report = run_scenario(&prepared, cli.tolerance_scale, cli.out.as_deref())?;
    for r in &report.results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("[{status}] verify[{}] {}", r.index, r.kind);
        for c in &r.checks {
            println!("    {} = {:.6e} (want {})", c.name, c.value, c.bound);
        }
        if let Some(e) = &r.error {
            println!("    error: {e}");
        }
    }
    if let Some(dir) = &cli.out {
        write_json(dir, "report.json", &report)?;
        println!("report written to {}", dir.join("report.json").display());
    }
    Ok(if report.has_errors() {
        exit::COMPUTATION
    } else if report.passed {
        exit::OK
    } else {
        exit::TOLERANCE
    })
}

fn suite_identities(cli: &Cli, n: usize, seed: u64, samples: usize) -> Result<i32, CliError> {
    let report = match identities(n, seed, samples, cli.tolerance_scale) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(exit::COMPUTATION);
        }
    };
    println!("identities: n = {n}, seed = {seed}");
    for r in &report.rows {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!(
            "[{status}] {:<32} samples {:>4}  max {:.3e}  tolerance {:.1e}",
            r.name, r.samples, r.max, r.tolerance
        );
    }
    if let Some(dir) = &cli.out {
        write_json(dir, "identities.json", &report)?;
    }
    Ok(if report.passed() { exit::OK } else { exit::TOLERANCE })
}

fn suite_acceptance(cli: &Cli, seed: u64) -> Result<i32, CliError> {
    let opts = SuiteOptions {
        seed,
        tolerance_scale: cli.tolerance_scale,
    };
    let mut results = Vec::new();
    for id in 1..=criterion_count() {
        let r = run_criterion(id, &opts);
        println!("{}", r.line());
        results.push(r);
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed", results.len());
    if let Some(dir) = &cli.out {
        write_json(dir, "acceptance.json", &results)?;
    }
    Ok(if passed == results.len() { exit::OK } else { exit::TOLERANCE })
}

fn show_registry(json: bool) {
    let entries = registry();
    if json {
        println!("{}", serde_json::to_string_pretty(&entries).expect("registry serializes"));
        return;
    }
    for e in entries {
        println!("{:<9} {:<24} [{}]  {}", e.role, e.kind, e.parameters.join(", "), e.description);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if !(cli.tolerance_scale > 0.0 && cli.tolerance_scale.is_finite()) {
        eprintln!("error: --tolerance-scale must be positive");
        return ExitCode::from(exit::INVALID as u8);
    }
    let status = match &cli.command {
        Command::Run { scenario } => run(&cli, scenario),
        Command::Suite(Suite::Identities { n, seed, samples }) => suite_identities(&cli, *n, *seed, *samples),
        Command::Suite(Suite::Acceptance { seed }) => suite_acceptance(&cli, *seed),
        Command::Registry { json } => {
            show_registry(*json);
            Ok(exit::OK)
        }
    };
    match status {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::INVALID as u8)
        }
    }
}

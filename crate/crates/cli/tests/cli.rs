use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use warpmass::geometry::MetricSource;
use warpmass::massint::{extrapolate, MassLadder};
use warpmass::models::{registry, BaseModel};
use warpmass_cli::{emit_convergence_plot_data, run_scenario, CliError, Scenario, FIT_SAMPLES};

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn warpmass(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_warpmass")).args(args).output().unwrap()
}

#[test]
fn registry_lists_the_required_families() {
    let entries = registry();
    let find = |role: &str, kind: &str| entries.iter().find(|e| e.role == role && e.kind == kind);
    for (role, kind) in [
        ("base", "flat"),
        ("base", "schwarzschild-conformal"),
        ("base", "conformally-flat"),
        ("graph", "expression"),
        ("graph", "flamm"),
        ("graph", "gaussian-bump"),
        ("graph", "paraboloid-cap"),
        ("warp", "expression"),
    ] {
        assert!(find(role, kind).is_some(), "{role}/{kind} missing");
    }
    assert_eq!(find("graph", "flamm").unwrap().parameters, &["mass"]);
}

#[test]
fn schwarzschild_factor_is_harmonic_and_matches_the_closed_form() {
    let base = BaseModel::SchwarzschildConformal { mass: 1.0 };
    let u = base.conformal_factor(3, &BTreeMap::new()).unwrap().unwrap();
    let metric = base.build(3, &BTreeMap::new()).unwrap();
    for x in [[1.0_f64, 0.5, -0.3], [0.2, -2.0, 1.1], [4.0, 3.0, 12.0]] {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let jet = u.eval_jet2(&x).unwrap();
        let laplacian: f64 = (0..3).map(|i| jet.hess(i, i)).sum();
        assert!(laplacian.abs() < 1e-12, "Δu = {laplacian}");
        assert!((jet.value() - (1.0 + 0.5 / r)).abs() < 1e-14);
        let h = metric.jet(&x).unwrap();
        assert!((h.g(0, 0) - jet.value().powi(4)).abs() < 1e-13);
        assert_eq!(h.g(0, 1), 0.0);
    }
}

#[test]
fn flat_end_is_the_euclidean_metric() {
    let metric = BaseModel::Flat.build(4, &BTreeMap::new()).unwrap();
    let h = metric.jet(&[0.3, -1.0, 2.0, 0.5]).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(h.g(i, j), if i == j { 1.0 } else { 0.0 });
        }
    }
}

fn five_rungs() -> MassLadder {
    let radii: Vec<f64> = (0..5).map(|k| 16.0 * 2f64.powi(k)).collect();
    let values = radii.iter().map(|r| 1.0 - 0.75 / r).collect();
    MassLadder::new("m", radii, values, 6.0).unwrap()
}

#[test]
fn plot_data_has_data_and_fit_lines_with_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.dat");
    emit_convergence_plot_data(&five_rungs(), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5 + FIT_SAMPLES);
    assert_eq!(FIT_SAMPLES, 50);
    for line in &lines {
        let cols: Vec<&str> = line.split(' ').collect();
        assert_eq!(cols.len(), 2);
        for c in cols {
            c.parse::<f64>().unwrap();
            let mantissa = c.split('e').next().unwrap();
            let digits = mantissa.chars().filter(|ch| ch.is_ascii_digit()).count();
            assert!(digits >= 12, "{c}");
        }
    }
    assert_eq!(lines[0], "1.600000000000000e1 9.531250000000000e-1");
    let last: Vec<f64> = lines.last().unwrap().split(' ').map(|c| c.parse().unwrap()).collect();
    assert_eq!(last[0], 256.0);
    assert!((last[1] - (1.0 - 0.75 / 256.0)).abs() < 1e-9);
}

#[test]
fn empty_ladder_is_an_error() {
    let ladder = MassLadder {
        label: "empty".into(),
        radii: Vec::new(),
        values: Vec::new(),
        fit: extrapolate(&[1.0, 2.0, 4.0, 8.0], &[1.0; 4], 6.0).unwrap(),
    };
    let dir = tempfile::tempdir().unwrap();
    assert!(emit_convergence_plot_data(&ladder, &dir.path().join("e.dat")).is_err());
}

#[test]
fn validation_errors_name_the_field() {
    let text = std::fs::read_to_string(scenario_path("flamm-penrose")).unwrap();
    let bad = text.replace("mass = 1.0 }", "mass = 1.0, spin = 2.0 }");
    match Scenario::parse(&bad) {
        Err(CliError::Validation { path, message }) => {
            assert!(path.starts_with("model.graph"), "{path:?} {message}");
            assert!(message.contains("spin"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let unsorted = std::fs::read_to_string(scenario_path("quasilocal-cap"))
        .unwrap()
        .replace("[1.0, 2.0, 4.0, 8.0, 16.0]", "[2.0, 1.0]");
    match Scenario::parse(&unsorted).unwrap().prepare() {
        Err(CliError::Validation { path, .. }) => assert_eq!(path, "verify[0].radii"),
        other => panic!("{:?}", other.map(|_| ())),
    }
    let unparsable = text.replace("kind = \"flamm\", mass = 1.0", "kind = \"expression\", f = \"exp(x1\"");
    match Scenario::parse(&unparsable).unwrap().prepare() {
        Err(CliError::Validation { path, .. }) => assert_eq!(path, "model"),
        other => panic!("{:?}", other.map(|_| ())),
    }
}

#[test]
fn ricci_flat_theorem_on_a_warped_ambient_is_rejected() {
    let s = Scenario::load(&scenario_path("ricci-flat-rejected")).unwrap();
    match s.prepare() {
        Err(CliError::Hypothesis { path, message }) => {
            assert_eq!(path, "verify[0].integrand");
            assert!(message.contains("Ricci-flat"), "{message}");
        }
        other => panic!("{:?}", other.map(|_| ())),
    }
    let out = warpmass(&["run", scenario_path("ricci-flat-rejected").to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hypothesis"));
}

#[test]
fn flamm_penrose_scenario_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = warpmass(&[
        "--out",
        dir.path().to_str().unwrap(),
        "run",
        scenario_path("flamm-penrose").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let penrose = &report["results"][1];
    assert_eq!(penrose["kind"], "penrose");
    assert!(penrose["data"]["margin"].as_f64().unwrap().abs() <= 0.01);
    assert_eq!(report["scenario"]["ladder"]["sphere_order"], 24);
    let table = std::fs::read_to_string(dir.path().join("00-masses-m_g.csv")).unwrap();
    assert_eq!(table.lines().count(), 6);
    assert!(table.starts_with("r,value\n"));
    assert!(dir.path().join("00-masses-m_g.dat").exists());
}

#[test]
fn reruns_reproduce_the_report_exactly() {
    let prepared = || Scenario::load(&scenario_path("flamm-penrose")).unwrap().prepare().unwrap();
    let a = run_scenario(&prepared(), 1.0, None).unwrap();
    let b = run_scenario(&prepared(), 1.0, None).unwrap();
    assert_eq!(a.reproducible_json(), b.reproducible_json());
    assert!(!a.reproducible_json().contains("started_unix"));
}

#[test]
fn tolerance_failures_set_the_exit_status() {
    let out = warpmass(&[
        "--tolerance-scale",
        "1e-6",
        "run",
        scenario_path("flamm-penrose").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[FAIL]"));
    let missing = warpmass(&["run", "/nonexistent/scenario.toml"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn identity_suite_prints_every_maximum() {
    let out = warpmass(&["suite", "identities", "--n", "3", "--seed", "5", "--samples", "40"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["newton contraction", "gauss cross-check", "structure equations", "killing equation"] {
        let line = text.lines().find(|l| l.contains(name)).unwrap_or_else(|| panic!("{name} missing"));
        assert!(line.starts_with("[PASS]") && line.contains("max "), "{line}");
    }
}

#[test]
fn shipped_scenarios_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let s = Scenario::load(&path).unwrap();
        let rejected = s.name == "ricci-flat-rejected";
        assert_eq!(s.prepare().is_err(), rejected, "{}", path.display());
    }
}

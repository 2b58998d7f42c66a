//! Exit codes and output files of the `qdlaser` binary.

use std::process::{Command, Output};

fn qdlaser(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdlaser"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(qdlaser(&["--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec!["sweep", "--bogus"],
        vec!["frobnicate"],
        vec!["sweep", "--out", out, "--threads", "0"],
        vec!["sweep", "--out", out, "--override", "beta=lots"],
        vec!["sweep", "--out", out, "--override", "no_equals_sign"],
        vec!["sweep", "--out", out, "--model", "classical"],
        vec!["sweep", "--out", out, "--config", "/nonexistent/config.toml"],
    ] {
        let o = qdlaser(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn semiclassical_sweep_writes_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdlaser(&[
        "sweep",
        "--out",
        dir.path().to_str().unwrap(),
        "--model",
        "semiclassical",
        "--feedback",
        "on",
        "--override",
        "pump_points=1",
        "--override",
        "pump_min_fs=1e-4",
        "--override",
        "pump_max_fs=1e-4",
        "--override",
        "sc_seeds=1",
        "--override",
        "sc_average_ps=270",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("pump_fs_inv,model,feedback,n_ph,g2,g2_stderr,terminated,wall_s")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[1..3], ["semiclassical", "on"]);
    assert!(lines.next().is_none());
    let manifest = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains("[resolved"));
    assert!(manifest.contains("sweep.csv"));
}

#[test]
fn mutated_model_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdlaser(&[
        "validate",
        "--out",
        dir.path().to_str().unwrap(),
        "--mutate",
        "carrier-gain",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stdout));
    let report = std::fs::read_to_string(dir.path().join("validate.txt")).unwrap();
    assert!(report.contains("FAIL"));
}

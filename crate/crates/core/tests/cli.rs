use std::path::Path;
use std::process::{Command, Output};

fn fpp_lab(args: &[&str], workers_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fpp-lab"));
    cmd.args(args);
    match workers_env {
        Some(w) => cmd.env("FPP_LAB_WORKERS", w),
        None => cmd.env_remove("FPP_LAB_WORKERS"),
    };
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn influence_run_succeeds_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kind": "influence", "v": [6, 2], "trials": 1}"#);
    let out = dir.path().join("out");
    let o = fpp_lab(
        &["influence", "--config", &cfg, "--trials", "25", "--seed", "4", "--out", out.to_str().unwrap()],
        Some("2"),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["influence.csv", "influence.json", "report.json", "timing.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["trials"], 25);
    assert_eq!(report["config"]["master_seed"], 4);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kind": "influence", "v": [6, 2], "trials": 0}"#);
    let o = fpp_lab(&["influence", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trials"));

    let o = fpp_lab(&["sideways", "--config", &cfg, "--trials", "3"], None);
    assert_eq!(o.status.code(), Some(2));

    let o = fpp_lab(&["influence", "--config", &cfg, "--trials", "3"], Some("zero"));
    assert_eq!(o.status.code(), Some(2));

    let missing = dir.path().join("nope.json");
    let o = fpp_lab(&["influence", "--config", missing.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_kind_passes_small_battery() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"kind": "validate", "trials": 1,
            "validate": {"oracle_seeds": 2, "gplus_samples": 5000, "mw_samples": 5000, "mw_n_grid": [1, 2]}}"#,
    );
    let out = dir.path().join("v");
    let o = fpp_lab(&["validate", "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", "1"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("oracle equivalence"));
}

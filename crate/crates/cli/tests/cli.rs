use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn latres(config: &str, dir: &Path, extra: &[&str]) -> (i32, String) {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_latres"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap()
}

const RATES: &str = r#"{
  "scenario": "rates",
  "potential": {"label": "exponential", "strength": 1.0},
  "distortion": {"field": "cutoff-dilation", "theta": [0.0, -0.1], "e0": 4.0},
  "ladder": {"h": [0.4, 0.2, 0.1, 0.05], "box_length": 12.8}
}"#;

#[test]
fn validate_passes_every_suite() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = latres(r#"{"scenario": "validate", "tolerances": {"validate_trials": 5}}"#, dir.path(), &[]);
    assert_eq!(code, 0, "{err}");
    let r = report(dir.path());
    let suites = r["suites"].as_array().unwrap();
    assert!(suites.len() >= 5);
    assert!(suites.iter().all(|s| s["status"] == "pass"));
    for key in ["config", "tracks", "provenance"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn unknown_key_is_a_config_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = latres(r#"{"scenario": "validate", "tolerance": {}}"#, dir.path(), &[]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown field"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn single_rung_sweep_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"scenario": "sweep-eigenvalues", "potential": {"label": "gaussian", "strength": -3.0},
                  "ladder": {"h": [0.4], "box_length": 25.6}}"#;
    let (code, err) = latres(cfg, dir.path(), &[]);
    assert_eq!(code, 1, "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_latres")).args(["--config", "/nonexistent/run.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (code, err) = latres(RATES, a.path(), &["--jobs", "1"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(latres(RATES, b.path(), &["--jobs", "3"]).0, 0);
    for file in ["out/report.json", "out/tracks.csv"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }
}

#[test]
fn failed_suite_exits_with_acceptance_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RATES.replacen("\"scenario\": \"rates\",", "\"scenario\": \"rates\", \"tolerances\": {\"rate_band\": 0.0},", 1);
    let (code, err) = latres(&cfg, dir.path(), &[]);
    assert_eq!(code, 2, "{err}");
    let r = report(dir.path());
    assert!(r["suites"].as_array().unwrap().iter().any(|s| s["status"] == "fail"));
}

#[test]
fn poisson_non_convergence_exits_with_status_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"scenario": "compute-resonances", "ladder": {"h": [0.4], "box_length": 25.6},
                  "tolerances": {"poisson_rel_tol": 1e-300, "poisson_max_shells": 1}}"#;
    let (code, err) = latres(cfg, dir.path(), &[]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn eigenvalue_sweep_writes_tidy_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"scenario": "sweep-eigenvalues",
                  "potential": {"label": "gaussian", "strength": -3.0},
                  "ladder": {"h": [0.4, 0.2, 0.1], "box_length": 25.6},
                  "reference_source": "oracle",
                  "oracle": {"kind": "bound-states", "half_width": 12.8, "points": 4000, "box_factor": 1.0}}"#;
    let (code, err) = latres(cfg, dir.path(), &["--seed", "11"]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(dir.path().join("out/tracks.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config: {"));
    assert_eq!(lines.next().unwrap(), "track_id,h,N,re_z,im_z,abs_err,multiplicity");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // two bound states tracked over three rungs
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.len() == 7 && r[5].parse::<f64>().unwrap() < 0.02));
    let r = report(dir.path());
    assert_eq!(r["config"]["seed"], 11);
    assert_eq!(r["provenance"]["poisson_tail_bounds"].as_array().unwrap().len(), 3);
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const MEDIUM: &str = r#""grids":{"n_x1":32,"n_x2":64,"x2_max":1.0,"n_theta":32,"n_xi2":128,"hardy_dim":128,"symbol_modes":32}"#;
const SMALL: &str = r#""grids":{"n_x1":16,"n_x2":32,"x2_max":1.0,"n_theta":16,"n_xi2":64,"hardy_dim":64,"symbol_modes":16}"#;

fn bdm(args: &[&str], dir: &Path, workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bdm"));
    cmd.args(args).current_dir(dir);
    match workers {
        Some(w) => cmd.env("BDM_WORKERS", w),
        None => cmd.env_remove("BDM_WORKERS"),
    };
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn rows<'a>(r: &'a Value, name: &str) -> Vec<&'a Value> {
    r["rows"].as_array().unwrap().iter().filter(|row| row["residual_name"] == name).collect()
}

#[test]
fn malformed_json_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"suite": "verify-cocycle", "tolerance": }"#);
    let out = bdm(&["verify-cocycle", "--config", &cfg, "--out", "r.json"], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("configuration error") && err.contains("bad.json"), "{err}");
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn invalid_configs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"suite": "pair-index"}"#,
        r#"{"grids": {"n_x1": 0}}"#,
        r#"{"tolerance": -1.0}"#,
        r#"{"unknown_field": 1}"#,
        r#"[1, 2]"#,
    ];
    for (k, text) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("c{k}.json"), text);
        let out = bdm(&["verify-trace", "--config", &cfg, "--out", "r.json"], dir.path(), None);
        assert_eq!(out.status.code(), Some(2), "{text}");
    }
    let cfg = write(dir.path(), "ok.json", "{}");
    let out = bdm(&["verify-trace", "--config", &cfg, "--out", "r.json"], dir.path(), Some("zero"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_tolerance_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &format!(r#"{{{SMALL}, "generators": {{"tuples": 2}}}}"#));
    let out = bdm(&["verify-trace", "--config", &cfg, "--out", "r.json", "--tol", "0"], dir.path(), None);
    assert_eq!(out.status.code(), Some(1));
    let r = report(dir.path(), "r.json");
    assert_eq!(r["pass"], false);
    assert_eq!(r["tolerance"], 0.0);
    assert!(dir.path().join("r.json.replay/t000.json").exists());
}

#[test]
fn cocycle_suite_passes_twenty_tuples_in_the_consistent_convention() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"convention": "consistent", "seed": 7}"#);
    let out = bdm(&["verify-cocycle", "--config", &cfg, "--out", "r.json"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(dir.path(), "r.json");
    assert_eq!(r["records"].as_array().unwrap().len(), 20);
    let mixed = rows(&r, "res_mixed");
    assert_eq!(mixed.len(), 20);
    assert!(mixed.iter().all(|row| row["value"].as_f64().unwrap() <= 1e-5));
    assert!(r["rows"].as_array().unwrap().iter().all(|row| row["grid_n_x1"] == 64 && row["hardy_n"] == 256));
    assert!(r["artifact_version"].as_str().unwrap().starts_with("0.1.0+"));
}

#[test]
fn literal_convention_fails_only_the_mixed_relation_and_dumps_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &format!(r#"{{{MEDIUM}, "generators": {{"tuples": 2}}}}"#));
    let out = bdm(&["verify-cocycle", "--config", &cfg, "--out", "r.json"], dir.path(), None);
    assert_eq!(out.status.code(), Some(1));
    let r = report(dir.path(), "r.json");
    for row in r["rows"].as_array().unwrap() {
        let mixed = row["residual_name"] == "res_mixed";
        assert_eq!(row["pass"].as_bool().unwrap(), !mixed, "{row}");
    }
    assert_eq!(r["failing"], serde_json::json!(["t000", "t001"]));
    // the replay reproduces the failing tuple verbatim
    let replay = "r.json.replay/t001.json";
    let out = bdm(&["verify-cocycle", "--config", replay, "--out", "again.json"], dir.path(), None);
    assert_eq!(out.status.code(), Some(1));
    let again = report(dir.path(), "again.json");
    let pick = |r: &Value, id: &str| r["records"].as_array().unwrap().iter().find(|x| x["tuple_id"] == id).unwrap()["res_mixed"].clone();
    assert_eq!(pick(&again, "s000"), pick(&r, "t001"));
}

#[test]
fn csv_reports_have_the_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &format!(r#"{{{SMALL}, "generators": {{"tuples": 1}}}}"#));
    let out = bdm(&["verify-trace", "--config", &cfg, "--out", "r.csv", "--seed", "3"], dir.path(), None);
    assert!(out.status.code().is_some());
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("suite,tuple_id,residual_name,value,grid_n_x1,grid_n_theta,hardy_N,tolerance,pass"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 9);
    assert_eq!((first[0], first[1], first[4], first[5], first[6]), ("verify-trace", "t000", "16", "16", "64"));
}

#[test]
fn suite_mismatch_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"suite": "sweep"}"#);
    let out = bdm(&["verify-cocycle", "--config", &cfg, "--out", "r.json"], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &format!(r#"{{{SMALL}, "seed": 11, "generators": {{"tuples": 3}}}}"#),
    );
    let mut reports = Vec::new();
    for (k, w) in [Some("1"), Some("3"), None].into_iter().enumerate() {
        let name = format!("r{k}.json");
        bdm(&["verify-cocycle", "--config", &cfg, "--out", &name], dir.path(), w);
        reports.push(std::fs::read(dir.path().join(&name)).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
}

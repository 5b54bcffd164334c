use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_currents-verify"))
}

fn run_with(dir: &Path, config: &str, extra: &[&str]) -> (Output, Option<Value>) {
    let cfg = dir.join("config.json");
    let out = dir.join("report.json");
    std::fs::write(&cfg, config).unwrap();
    let output =
        bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).args(extra).output().unwrap();
    let report = std::fs::read_to_string(&out).ok().map(|t| serde_json::from_str(&t).unwrap());
    (output, report)
}

#[test]
fn list_suites_names_every_suite() {
    let out = bin().arg("list-suites").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("theorem-D-pointwise-bracket"));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn dump_identity_loop_has_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("id.csv");
    let out = bin().args(["dump-gridmap", "identity-loop", "--n", "8", "--out"]).arg(&path).output().unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.starts_with("index,ambient_0,ambient_1"));

    let json_path = dir.path().join("id.json");
    let out = bin()
        .args(["dump-gridmap", "double-loop", "--n", "16", "--format", "json", "--out"])
        .arg(&json_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(v["grid"]["n"], 16);
}

#[test]
fn dump_unknown_id_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        bin().args(["dump-gridmap", "no-such-loop", "--out"]).arg(dir.path().join("x.csv")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown id"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = run_with(dir.path(), r#"{"seed": 1, "tolerances": {"tol_chart": -1e-9}}"#, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(report.is_none());

    let (out, _) = run_with(dir.path(), "{\"seed\": 1,\n \"sample_count\": 3}", &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sample_count") && err.contains("line 2"), "{err}");

    let (out, _) = run_with(dir.path(), r#"{"suites": ["local-action-form"]}"#, &[]);
    assert_eq!(out.status.code(), Some(2));

    let (out, _) = run_with(dir.path(), r#"{"seed": 1}"#, &["--suite", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn groupoid_axioms_over_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = run_with(
        dir.path(),
        r#"{"seed": 42, "suites": ["groupoid-axioms"], "samples": {"axioms": 200}}"#,
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = report.unwrap();
    let recs = report["records"].as_array().unwrap();
    assert!(recs.len() >= 6);
    assert!(recs.iter().all(|r| r["status"] == "pass" && r["seed"].is_u64()));
}

#[test]
fn not_tra_is_obstructed_as_expected_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"seed": 1, "suites": ["groupoid-axioms"], "certificate_grids": [64, 128]}"#;
    let (out, report) = run_with(dir.path(), cfg, &["--seed", "42", "--suite", "not-tra-certificate"]);
    assert!(out.status.success());
    let report = report.unwrap();
    assert_eq!(report["seed"], 42);
    let recs = report["records"].as_array().unwrap();
    assert!(recs.iter().all(|r| r["suite"] == "not-tra-certificate"));
    let certs: Vec<&Value> = recs.iter().filter(|r| r["certificate"].is_object()).collect();
    assert_eq!(certs.len(), 2);
    for r in certs {
        assert_eq!(r["status"], "obstructed-as-expected");
        assert_eq!(r["certificate"]["verdict"], "obstructed");
    }
}

#[test]
fn csv_dumps_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("csv");
    let cfg = format!(
        r#"{{"seed": 3, "suites": ["not-proper-certificate"], "output": {{"csv_dir": {:?}}}}}"#,
        csv.display().to_string()
    );
    let (out, _) = run_with(dir.path(), &cfg, &[]);
    assert!(out.status.success());
    let table = std::fs::read_to_string(csv.join("seminorms.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
    assert!(csv.join("identity-loop.csv").exists());
}

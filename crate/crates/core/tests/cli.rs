use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run_cli(dir: &Path, spec: &str, extra: &[&str]) -> Output {
    let spec_path = dir.join("spec.json");
    fs::write(&spec_path, spec).unwrap();
    Command::new(env!("CARGO_BIN_EXE_asymptolab"))
        .arg("--spec")
        .arg(&spec_path)
        .arg("--out")
        .arg(dir)
        .args(extra)
        .output()
        .unwrap()
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn porosity_of_powers_of_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(dir.path(), r#"{"command": "porosity", "family": {"kind": "geometric", "q": 2}}"#, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path(), "porosity.json");
    let p = r["result"]["estimate"]["value_by_gap_formula"].as_f64().unwrap();
    assert!((p - 0.5).abs() <= 1e-3, "{p}");

    let csv = fs::read_to_string(dir.path().join("porosity.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("h,l,ratio"));
    for line in lines {
        let ratio: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&ratio));
    }
}

#[test]
fn graph_on_integers_is_k5() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{"command": "graph", "family": {"kind": "integers"}, "grid": [[-2], [-1], [1], [2]]}"#;
    let out = run_cli(dir.path(), spec, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = &report(dir.path(), "graph.json")["result"];
    assert_eq!(r["graph"]["vertices"].as_array().unwrap().len(), 5);
    assert_eq!(r["edges"].as_array().unwrap().len(), 10);
    assert_eq!(r["cliques"].as_array().unwrap().len(), 1);
}

#[test]
fn fn_scan_writes_sups() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(dir.path(), r#"{"command": "fn-scan", "family": {"kind": "integers"}}"#, &["--lambda", "256"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("fn_scan.csv")).unwrap();
    assert!(csv.starts_with("R,sup_Fn\n"));
    assert_eq!(report(dir.path(), "fn_scan.json")["config"]["overrides"]["lambda"].as_f64(), Some(256.0));
}

#[test]
fn malformed_specs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for spec in ["{", r#"{"command": "porosity", "unknown": 1}"#, r#"{"command": "porosity", "family": {"kind": "geometric", "q": 0.5}}"#] {
        let out = run_cli(dir.path(), spec, &[]);
        assert_eq!(out.status.code(), Some(2), "{spec}");
    }
    let out = Command::new(env!("CARGO_BIN_EXE_asymptolab")).arg("--no-such-flag").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn resource_cap_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{"command": "graph", "rule": {"kind": "perturbed_integers", "delta": 0.25, "seed": 1},
                   "scaling": {"kind": "exp2_poly", "a": 1, "b": 0, "c": 0}}"#;
    let out = run_cli(dir.path(), spec, &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn classify_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let spec = r#"{"command": "classify", "family": {"kind": "superexp", "c": 1}, "seed": 5}"#;
    for d in [&a, &b] {
        assert_eq!(run_cli(d.path(), spec, &[]).status.code(), Some(0));
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("classify.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert!(a.path().join("timings.json").exists());
}

#[test]
fn verify_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(dir.path(), r#"{"command": "verify"}"#, &["--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path(), "verify.json");
    assert_eq!(r["result"]["consistent"], Value::Bool(true));
    assert_eq!(r["result"]["flags"].as_array().unwrap().len(), 0);
}

//! End-to-end runs of the `freelip` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn freelip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freelip")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn analyze_line_and_equilateral() {
    let dir = tempfile::tempdir().unwrap();
    let line = write(
        dir.path(),
        "line.json",
        r#"{"labels": ["0", "1", "2"], "base": "0", "coords": {"points": [[0], [1], [2]], "p": 1}}"#,
    );
    let out = freelip(&["analyze", &line, "--exact", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["passed"], true);
    assert!(dir.path().join("classification.csv").exists());

    let tri = write(
        dir.path(),
        "tri.json",
        r#"{"labels": ["a", "b", "c"], "base": "a", "matrix": [[0, 1, 1], [1, 0, 1], [1, 1, 0]]}"#,
    );
    let out = freelip(&["analyze", &tri]);
    assert!(out.status.success());
    assert_eq!(report(&out)["passed"], true);
}

#[test]
fn invalid_space_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"labels": ["a", "b", "c"], "base": "a", "matrix": [[0, 1, 3], [1, 0, 1], [3, 1, 0]]}"#,
    );
    let out = freelip(&["analyze", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn grid_runs_are_deterministic() {
    let args = ["grid", "--p", "2", "--depth", "3", "--run", "sna", "--eps", "0.5", "--seed", "7", "--count", "5"];
    let a = freelip(&args);
    let b = freelip(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(report(&a)["passed"], true);
}

#[test]
fn grid_nocufe_and_alpha() {
    let out = freelip(&["grid", "--p", "2", "--depth", "5", "--run", "nocufe"]);
    assert!(out.status.success());
    assert_eq!(report(&out)["passed"], true);
    let out = freelip(&["grid", "--p", "1", "--depth", "3", "--run", "alpha", "--exact"]);
    assert!(out.status.success());
    assert_eq!(report(&out)["passed"], true);
    let out = freelip(&["grid", "--p", "2", "--depth", "3", "--run", "alpha"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cantor_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = freelip(&["cantor", "--stage", "3", "--grid", "1000", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["passed"], true);
    assert!(dir.path().join("trend.csv").exists());
}

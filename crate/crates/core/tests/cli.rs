use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ginibre-jpd"));
    c.env_remove("GINIBRE_JPD_WORKERS");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn ginue_density_slice() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["density", "--model", "ginue", "--n", "4", "--grid", "-1:1:3", "--slice", "y=0", "--out", "d.csv"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("d.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "coord,value");
    assert_eq!(lines.len(), 4);
    let centre: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!((centre - std::f64::consts::FRAC_1_PI).abs() < 1e-14);
    assert!(dir.path().join("d.csv.config.json").exists());
}

#[test]
fn mc_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["mc", "--tau", "0", "--n", "4", "--samples", "4000", "--hist2d", "-3:3:12 x -3:3:12", "--out", "run"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(&dir.path().join("run/summary.json"));
    assert_eq!(summary["summary"]["n_matrices"], 4000);
    assert_eq!(summary["grids"][0]["mass"], 16000);

    let o = run(
        dir.path(),
        &["compare", "--hist", "run/hist2d.json", "--model", "ginue", "--n", "4", "--out", "cmp.json"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&dir.path().join("cmp.json"));
    assert_eq!(report["check"], "compare_density");
    assert_eq!(report["verdict"], "pass");

    let o = run(
        dir.path(),
        &["compare", "--hist", "run/hist2d.json", "--model", "ginue", "--n", "7", "--out", "bad.json"],
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    for w in ["1", "3"] {
        let out = format!("w{w}");
        let o = run(
            dir.path(),
            &[
                "--workers", w, "mc", "--tau", "0.5", "--n", "6", "--samples", "500", "--seed", "9",
                "--strip", "-2:2:20", "--out", &out,
            ],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.path().join("w1/strip.csv")).unwrap();
    let b = std::fs::read(dir.path().join("w3/strip.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn existing_outputs_need_force() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["density", "--model", "ginue", "--n", "3", "--grid", "0:1:2", "--slice", "y=0", "--out", "d.csv"];
    assert_eq!(code(&run(dir.path(), &args)), 0);
    assert_eq!(code(&run(dir.path(), &args)), 2);
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(code(&run(dir.path(), &forced)), 0);
}

#[test]
fn replay_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["mc", "--tau", "0.3", "--n", "5", "--samples", "300", "--seed", "4", "--hist2d", "-3:3:6 x -3:3:6", "--out", "r"],
    );
    assert_eq!(code(&o), 0);
    let before = std::fs::read(dir.path().join("r/hist2d.csv")).unwrap();
    assert_eq!(code(&run(dir.path(), &["replay", "r/config.json"])), 2);
    assert_eq!(code(&run(dir.path(), &["replay", "r/config.json", "--force"])), 0);
    assert_eq!(std::fs::read(dir.path().join("r/hist2d.csv")).unwrap(), before);
}

#[test]
fn identity_report_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["identity", "sphere-lemma", "--n", "4", "--f", "u", "--samples", "20000"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["verdict"], "pass");
    let reference = report["statistics"]["reference"].as_f64().unwrap();
    assert!((reference - 0.4).abs() < 1e-10);
}

#[test]
fn domain_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["outlier", "--alpha", "0.9", "--mode", "profile", "--grid", "0:1:3", "--out", "o.csv"]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
    let o = run(dir.path(), &["mc", "--tau", "1.5", "--n", "4", "--samples", "10", "--strip", "-1:1:4", "--out", "x"]);
    assert_eq!(code(&o), 2);
}

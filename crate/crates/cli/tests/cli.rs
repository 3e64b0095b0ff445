use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cpc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpc"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write_data(dir: &Path) {
    // y = x + small noise for columns a, b; c is unrelated.
    let mut s = String::from("a,b,c\n");
    let mut state = 12345u64;
    let mut unif = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for _ in 0..160 {
        let x = unif();
        s.push_str(&format!("{x},{},{}\n", x + 0.1 * unif(), unif()));
    }
    fs::write(dir.join("d.csv"), s).unwrap();
}

#[test]
fn json_report_has_core_fields_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path());
    let args = ["test", "--csv", "d.csv", "--x", "a", "--y", "b", "--classifier", "logistic", "--seed", "3"];
    let first = cpc(&args, dir.path());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let second = cpc(&args, dir.path());
    assert_eq!(first.stdout, second.stdout);
    let v: Value = serde_json::from_slice(&first.stdout).unwrap();
    for key in ["statistic", "p_value", "R", "sigma_hat_sq", "n1", "n2", "seed", "classifier"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["n1"], 80);
    assert!(v["p_value"].as_f64().unwrap() < 0.01);
}

#[test]
fn csv_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path());
    let out = cpc(
        &["test", "--csv", "d.csv", "--x", "a", "--y", "c", "--method", "dcor", "--permutations", "19", "--format", "csv", "--output", "r.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].split(',').any(|h| h == "p_value"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path());
    let overlap = cpc(&["test", "--csv", "d.csv", "--x", "a,b", "--y", "b"], dir.path());
    assert_eq!(overlap.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&overlap.stderr).contains("--x and --y"));
    let missing = cpc(&["test", "--csv", "d.csv", "--x", "a", "--y", "zz"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    let foreign = cpc(&["test", "--csv", "d.csv", "--x", "a", "--y", "b", "--classifier", "logistic", "--hidden", "4"], dir.path());
    assert_eq!(foreign.status.code(), Some(2));
    let no_input = cpc(&["test", "--x", "a", "--y", "b"], dir.path());
    assert_eq!(no_input.status.code(), Some(2));
}

#[test]
fn unreadable_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = cpc(&["test", "--csv", "nope.csv", "--x", "a", "--y", "b"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sparse_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut x = String::from("%%MatrixMarket matrix coordinate real general\n40 3 40\n");
    let mut y = String::from("%%MatrixMarket matrix coordinate real general\n40 2 40\n");
    for i in 1..=40 {
        x.push_str(&format!("{i} {} {}\n", 1 + i % 3, (i % 7) as f64 + 1.0));
        y.push_str(&format!("{i} {} {}\n", 1 + i % 2, (i % 5) as f64 + 0.5));
    }
    fs::write(dir.path().join("x.mtx"), x).unwrap();
    fs::write(dir.path().join("y.mtx"), y).unwrap();
    let out = cpc(&["test", "--sparse-x", "x.mtx", "--sparse-y", "y.mtx", "--classifier", "logistic"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 40);
    let half = cpc(&["test", "--sparse-x", "x.mtx"], dir.path());
    assert_eq!(half.status.code(), Some(2));
}

#[test]
fn check_fast_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = cpc(&["check", "--fast"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 4);
}

#[test]
fn simulate_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("p.toml"),
        "experiment = \"power\"\nmodels = [\"M1\"]\na_grid = [0.0, 1.0]\nn = 120\nd = 2\nreps = 3\nmethods = [\"cpc\"]\nclassifier = \"logistic\"\n",
    )
    .unwrap();
    let out = cpc(&["simulate", "--config", "p.toml", "--out", "o", "--seed", "5"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = fs::read_to_string(dir.path().join("o/records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 2 * 3);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "power");
    assert_eq!(manifest["config"]["master_seed"], 5);
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 6);

    fs::write(dir.path().join("bad.toml"), "experiment = \"power\"\nbogus = 1\n").unwrap();
    let bad = cpc(&["simulate", "--config", "bad.toml"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn bench_rows_follow_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = cpc(
        &["bench", "--grid", "n=160,80", "d=2", "--methods", "cpc", "--reps", "1", "--classifier", "logistic", "--out", "b"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("b/timing.csv")).unwrap();
    let ns: Vec<usize> = rdr.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    assert_eq!(ns, vec![80, 160]);
    let bad = cpc(&["bench", "--grid", "q=1"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
}

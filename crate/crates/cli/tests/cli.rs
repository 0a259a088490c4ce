use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use duelgrad_cli::experiment::{SUMMARY_HEADER, TRAJECTORY_HEADER};
use tempfile::TempDir;

fn duelgrad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_duelgrad"))
        .args(args)
        .env_remove("DUELGRAD_SEED")
        .output()
        .expect("binary runs")
}

fn manual_config(dir: &Path, budget: u64) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let text = format!(
        r#"{{
  "objective": {{"kind": "quadratic", "eigenvalues": [4.0, 1.0], "minimizer": [0.1, -0.2], "radius": 1.0}},
  "transfer": {{"kind": "sigmoid", "omega": 3.0}},
  "algorithm": "rgd",
  "tuning": {{"kind": "manual", "eta": 0.02, "gamma": 0.05, "budget": {budget}}},
  "eps": 0.05,
  "trials": 3,
  "base_seed": 11,
  "output": "{}"
}}"#,
        dir.join("out").display()
    );
    fs::write(&path, text).unwrap();
    path
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn single_step_budget_records_both_endpoints() {
    let tmp = TempDir::new().unwrap();
    let cfg = manual_config(tmp.path(), 1);
    let out = duelgrad(&["run", "--config", cfg.to_str().unwrap(), "--trials", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("out/trajectories/trial_0000.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], TRAJECTORY_HEADER);
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,0,"));
    assert!(lines[2].starts_with("2,1,"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = manual_config(tmp.path(), 500);
    let cfg = cfg.to_str().unwrap();
    let out_dir = tmp.path().join("out");
    let mut snapshots = Vec::new();
    for jobs in ["1", "3"] {
        let out = duelgrad(&["run", "--config", cfg, "--jobs", jobs]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        snapshots.push(read_tree(&out_dir));
        fs::remove_dir_all(&out_dir).unwrap();
    }
    let (a, b) = (&snapshots[0], &snapshots[1]);
    assert_eq!(a.len(), 3 + 2);
    assert_eq!(a, b);
    let summary = String::from_utf8(a.iter().find(|(n, _)| n == "summary.csv").unwrap().1.clone()).unwrap();
    assert_eq!(summary.lines().next(), Some(SUMMARY_HEADER));
    assert!(summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .eq(["11", "12", "13"]));
}

#[test]
fn seed_flag_and_environment_fallback() {
    let tmp = TempDir::new().unwrap();
    let cfg = manual_config(tmp.path(), 10);
    let cfg = cfg.to_str().unwrap();
    let out = duelgrad(&["run", "--config", cfg, "--seed", "100", "--trials", "1"]);
    assert!(out.status.success());
    let summary = fs::read_to_string(tmp.path().join("out/summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("0,100,"));

    let out_dir = tmp.path().join("env");
    let res = Command::new(env!("CARGO_BIN_EXE_duelgrad"))
        .args([
            "run", "--trials", "1", "--tuning", "manual", "--eta", "0.1", "--gamma", "0.1", "--budget", "5",
        ])
        .args(["--out", out_dir.to_str().unwrap()])
        .env("DUELGRAD_SEED", "77")
        .output()
        .unwrap();
    assert!(res.status.success());
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("0,77,"));
}

#[test]
fn epoch_runs_write_epoch_tables() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("epochs");
    let res = duelgrad(&[
        "run",
        "--algorithm",
        "epoch",
        "--tuning",
        "theorem",
        "--transfer",
        "linear",
        "--c-rho",
        "1",
        "--eps",
        "1.2",
        "--trials",
        "1",
        "--ctilde",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    // The default objective has α = 1 = β.
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let table = fs::read_to_string(out.join("epochs/trial_0000.csv")).unwrap();
    assert!(table.starts_with("k,diameter,eta,gamma,budget,"));
    assert_eq!(table.lines().count(), 1 + 2);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    // invalid config value
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"objective": {"kind": "quadratic"}}"#).unwrap();
    assert_eq!(
        duelgrad(&["run", "--config", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
    let res = duelgrad(&["run", "--trials", "0", "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("`trials`"));
    let res = duelgrad(&["run", "--tuning", "manual", "--eta", "0.1", "--budget", "3"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("tuning.gamma"));
    assert_eq!(duelgrad(&["diagnose", "--suite", "nope"]).status.code(), Some(2));
    // missing config file and an output path blocked by a regular file
    assert_eq!(
        duelgrad(&["run", "--config", "/nonexistent/cfg.json"]).status.code(),
        Some(3)
    );
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let res = duelgrad(&[
        "run",
        "--tuning",
        "manual",
        "--eta",
        "0.1",
        "--gamma",
        "0.1",
        "--budget",
        "2",
        "--trials",
        "1",
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn diagnose_writes_a_json_report() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("report.json");
    let res = duelgrad(&["diagnose", "--suite", "objectives", "--out", path.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stdout));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(json["suite"], "objectives");
    assert_eq!(json["failed"], 0);

    let res = duelgrad(&["diagnose", "--suite", "ctilde", "--samples", "20000"]);
    assert!(res.status.success());
    let json: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    let reports = json["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 7);
    for r in reports {
        for key in ["name", "estimate", "std_error", "n", "target", "verdict"] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn tune_prints_the_epoch_table() {
    let res = duelgrad(&[
        "tune",
        "--algorithm",
        "epoch",
        "--tuning",
        "theorem",
        "--transfer",
        "linear",
        "--c-rho",
        "1",
        "--alpha",
        "0.5",
        "--beta",
        "1",
        "--dim",
        "2",
        "--diameter",
        "2",
        "--eps",
        "0.5",
    ]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.starts_with("k_eps\t5\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with(char::is_numeric)).count(), 5);
    let trivial = duelgrad(&[
        "tune",
        "--algorithm",
        "epoch",
        "--tuning",
        "theorem",
        "--transfer",
        "linear",
        "--c-rho",
        "1",
        "--alpha",
        "0.5",
        "--beta",
        "1",
        "--diameter",
        "2",
        "--eps",
        "2",
    ]);
    assert_eq!(
        String::from_utf8(trivial.stdout).unwrap(),
        "trivial: every feasible point is ε-optimal\n"
    );
}

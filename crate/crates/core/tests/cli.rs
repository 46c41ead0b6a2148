use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn permtest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permtest"))
        .args(args)
        .output()
        .unwrap()
}

fn json(output: &Output) -> Value {
    serde_json::from_slice(&output.stdout).expect("stdout is one JSON document")
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn worked_instance_full_group() {
    let ws = Workspace::new();
    let data = ws.file("x.csv", "2.1,0.3,-1.2,0.7\n");
    let out = permtest(&[
        "test",
        "--data",
        s(&data),
        "--stat",
        "diff-sum:n=2",
        "--group",
        "two-sample:2",
        "--scheme",
        "full",
        "--alpha",
        "1/3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["schema"], "permtest/1");
    assert_eq!(report["decision"], "reject");
    assert_eq!(report["counts"]["D"], 8);
    assert_eq!(report["threshold_index"], 16);
    assert!((report["p_value"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert!(!out.stderr.is_empty());
}

#[test]
fn alpha_zero_retains() {
    let ws = Workspace::new();
    let data = ws.file("x.csv", "2.1\n0.3\n-1.2\n0.7\n");
    let out = permtest(&[
        "test",
        "--data",
        s(&data),
        "--stat",
        "diff-sum:n=2",
        "--group",
        "two-sample:2",
        "--alpha",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["decision"], "retain");
    assert_eq!(report["counts"]["D"], 8);
}

#[test]
fn class_draws_on_the_worked_instance() {
    let ws = Workspace::new();
    let data = ws.file("x.csv", "2.1,0.3,-1.2,0.7\n");
    let base = [
        "test",
        "--data",
        s(&data),
        "--stat",
        "diff-sum:n=2",
        "--group",
        "two-sample:2",
        "--scheme",
        "class-without-repl",
        "--w",
        "6",
        "--seed",
        "11",
        "--alpha",
    ];
    let at = |alpha: &str| {
        let mut args = base.to_vec();
        args.push(alpha);
        json(&permtest(&args))
    };
    let third = at("1/3");
    assert_eq!(third["decision"], "reject");
    assert_eq!(third["k_prime"], 4);
    assert_eq!(third["counts"]["B"], 2);
    // 0.3333 < 1/3 puts the threshold at the fifth value
    let rounded = at("0.3333");
    assert_eq!(rounded["k_prime"], 5);
    assert_eq!(rounded["decision"], "retain");
}

#[test]
fn random_schemes_require_a_seed_and_replay_exactly() {
    let ws = Workspace::new();
    let data = ws.file("x.csv", "0.3,1.9,-0.4,2.2,0.1,-1.0,0.8,0.05\n");
    let mut args = vec![
        "test",
        "--data",
        s(&data),
        "--stat",
        "diff-sum:n=4",
        "--group",
        "full-symmetric:8",
        "--scheme",
        "with-repl",
        "--w",
        "25",
        "--alpha",
        "0.037",
        "--randomized",
        "on",
    ];
    let missing = permtest(&args);
    assert_eq!(missing.status.code(), Some(1));
    assert!(missing.stdout.is_empty());

    args.extend(["--seed", "2024"]);
    let first = permtest(&args);
    let second = permtest(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    let report = json(&first);
    assert_eq!(report["seed"], 2024);
    assert_eq!(report["draws"].as_array().unwrap().len(), 25);
    assert_eq!(
        report["draws"][0],
        serde_json::json!([0, 1, 2, 3, 4, 5, 6, 7])
    );
    let p = report["p_value"].as_f64().unwrap();
    assert!(p <= report["p_value_upper"].as_f64().unwrap());
}

#[test]
fn naive_scheme_needs_the_override() {
    let ws = Workspace::new();
    let data = ws.file("x.csv", "2.1,0.3,-1.2,0.7\n");
    let mut args = vec![
        "test",
        "--data",
        s(&data),
        "--stat",
        "diff-sum:n=2",
        "--group",
        "two-sample:2",
        "--scheme",
        "naive",
        "--w",
        "10",
        "--seed",
        "5",
        "--alpha",
        "0.1",
    ];
    assert_eq!(permtest(&args).status.code(), Some(1));
    args.push("--allow-naive");
    let out = permtest(&args);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert!(report.get("p_value").is_none());
    assert!(report["p_hat"].is_number() && report["p_tilde"].is_number());
    assert_eq!(report["plan"]["include_identity"], false);
}

#[test]
fn explicit_transforms_and_coset_scheme() {
    let ws = Workspace::new();
    let data = ws.file("x.csv", "0.5,-1.5,2.0,0.25,1.0\n");
    let cyclic = ws.file(
        "cyclic.json",
        r#"[{"shift":0,"n":5},{"shift":1,"n":5},{"shift":2,"n":5},{"shift":3,"n":5},{"shift":4,"n":5}]"#,
    );
    let full = json(&permtest(&[
        "test",
        "--data",
        s(&data),
        "--stat",
        "sum-first:k=2",
        "--transforms-file",
        s(&cyclic),
        "--alpha",
        "0.2",
    ]));
    let coset = json(&permtest(&[
        "test",
        "--data",
        s(&data),
        "--stat",
        "sum-first:k=2",
        "--transforms-file",
        s(&cyclic),
        "--scheme",
        "coset",
        "--seed",
        "3",
        "--alpha",
        "0.2",
    ]));
    assert_eq!(full["decision"], coset["decision"]);
    assert_eq!(full["p_value"], coset["p_value"]);
    assert_eq!(coset["procedure"], "coset");
}

#[test]
fn input_errors_exit_one_and_infeasibility_exits_two() {
    let ws = Workspace::new();
    let grid = ws.file("grid.csv", "1,2\n3,4\n");
    let out = permtest(&[
        "test",
        "--data",
        s(&grid),
        "--stat",
        "mean",
        "--group",
        "cyclic:4",
        "--alpha",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());

    let data = ws.file("x.csv", "1,2,3,4\n");
    let bad_alpha = permtest(&[
        "test",
        "--data",
        s(&data),
        "--stat",
        "mean",
        "--group",
        "cyclic:4",
        "--alpha",
        "1.5",
    ]);
    assert_eq!(bad_alpha.status.code(), Some(1));
    let bad_stat = permtest(&[
        "test",
        "--data",
        s(&data),
        "--stat",
        "median",
        "--group",
        "cyclic:4",
        "--alpha",
        "0.1",
    ]);
    assert_eq!(bad_stat.status.code(), Some(1));

    let values: Vec<String> = (0..14).map(|i| (i as f64 * 0.37).to_string()).collect();
    let wide = ws.file("wide.csv", &values.join(","));
    let out = permtest(&[
        "test",
        "--data",
        s(&wide),
        "--stat",
        "mean",
        "--group",
        "full-symmetric:14",
        "--alpha",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());

    let small = ws.file("small.csv", "1,2,3,4\n");
    let out = permtest(&[
        "test",
        "--data",
        s(&small),
        "--stat",
        "diff-sum:n=2",
        "--group",
        "two-sample:2",
        "--scheme",
        "class-without-repl",
        "--w",
        "7",
        "--seed",
        "1",
        "--alpha",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pvalue_subcommand() {
    let ws = Workspace::new();
    let data = ws.file("x.csv", "2.1,0.3,-1.2,0.7\n");
    let out = permtest(&[
        "pvalue",
        "--data",
        s(&data),
        "--stat",
        "diff-sum:n=2",
        "--group",
        "two-sample:2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert!((report["p_value"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert!(report.get("decision").is_none());

    let out = permtest(&[
        "pvalue",
        "--data",
        s(&data),
        "--stat",
        "diff-sum:n=2",
        "--group",
        "two-sample:2",
        "--scheme",
        "with-repl",
        "--w",
        "50",
        "--seed",
        "8",
        "--randomized",
        "on",
    ]);
    let report = json(&out);
    assert!(report["p_value"].as_f64().unwrap() <= report["p_value_upper"].as_f64().unwrap());
}

#[test]
fn verify_group_exit_codes() {
    let ws = Workspace::new();
    assert_eq!(
        permtest(&["verify-group", "--group", "full-symmetric:4"])
            .status
            .code(),
        Some(0)
    );
    let balanced = permtest(&["verify-group", "--balanced", "2"]);
    assert_eq!(balanced.status.code(), Some(3));
    let report = json(&balanced);
    assert_eq!(report["contains_identity"], false);
    assert_eq!(report["is_group"], false);

    let identity = ws.file("id.json", "[[0,1,2]]");
    assert_eq!(
        permtest(&["verify-group", "--transforms-file", s(&identity)])
            .status
            .code(),
        Some(0)
    );
    let swap = ws.file("swap.json", "[[1,0,2]]");
    assert_eq!(
        permtest(&["verify-group", "--transforms-file", s(&swap)])
            .status
            .code(),
        Some(3)
    );
    let broken = ws.file("broken.json", "[[0,1,");
    assert_eq!(
        permtest(&["verify-group", "--transforms-file", s(&broken)])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        permtest(&["verify-group", "--balanced", "3"]).status.code(),
        Some(1)
    );
}

const CONFIG: &str = r#"{
  "experiment": "type1",
  "null_model": {"kind": "normal", "dimension": 6},
  "test": {"procedure": "randomized", "group": "full-symmetric:6", "statistic": "diff-sum:n=3",
           "scheme": "without-replacement", "alpha": 0.05, "w": 19},
  "replications": REPS,
  "master_seed": 77,
  "cutoffs": [0.01, 0.05]
}"#;

#[test]
fn simulate_writes_reports_and_traces() {
    let ws = Workspace::new();
    let config = ws.file("config.json", &CONFIG.replace("REPS", "2000"));
    let (one, eight, trace) = (
        ws.path("one.json"),
        ws.path("eight.json"),
        ws.path("trace.csv"),
    );
    let out = permtest(&[
        "simulate",
        "--config",
        s(&config),
        "--out",
        s(&one),
        "--jobs",
        "1",
        "--trace",
        s(&trace),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(
        permtest(&[
            "simulate",
            "--config",
            s(&config),
            "--out",
            s(&eight),
            "--jobs",
            "8"
        ])
        .status
        .code(),
        Some(0)
    );
    let one_bytes = std::fs::read(&one).unwrap();
    assert_eq!(one_bytes, std::fs::read(&eight).unwrap());

    let report: Value = serde_json::from_slice(&one_bytes).unwrap();
    assert_eq!(report["schema"], "permtest/1");
    assert_eq!(report["replications"], 2000);
    assert_eq!(report["config"]["master_seed"], 77);
    let table = report["exceedance"].as_array().unwrap();
    assert!(table[0]["rate"].as_f64().unwrap() <= table[1]["rate"].as_f64().unwrap());
    assert_eq!(
        std::fs::read_to_string(&trace).unwrap().lines().count(),
        2001
    );

    let stdout = permtest(&["simulate", "--config", s(&config), "--jobs", "2"]);
    assert_eq!(stdout.stdout, one_bytes);
}

#[test]
fn simulate_single_replication_and_bad_configs() {
    let ws = Workspace::new();
    let config = ws.file("one.json", &CONFIG.replace("REPS", "1"));
    let report = json(&permtest(&["simulate", "--config", s(&config)]));
    let rate = report["rejection_rate"].as_f64().unwrap();
    assert!(rate == 0.0 || rate == 1.0);
    assert_eq!(report["standard_error"], 0.0);

    let zero = ws.file("zero.json", &CONFIG.replace("REPS", "0"));
    assert_eq!(
        permtest(&["simulate", "--config", s(&zero)]).status.code(),
        Some(1)
    );
    let garbage = ws.file("garbage.json", "{");
    assert_eq!(
        permtest(&["simulate", "--config", s(&garbage)])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        permtest(&["simulate", "--config", "/nonexistent/config.json"])
            .status
            .code(),
        Some(1)
    );
}

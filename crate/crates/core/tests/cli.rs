mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hosgns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hosgns")).args(args).env_remove("HOSGNS_THREADS").output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hosgns(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: [&str; 8] = ["--dim", "8", "--iterations", "60", "--batch", "1000", "--runs", "2"];

#[test]
fn ingest_prints_stats_and_writes_the_graph() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::hospital_path();
    let stdout = ok(&["ingest", "--input", data.to_str().unwrap(), "--output", dir.path().to_str().unwrap()]);
    let stats: Value = serde_json::from_str(&stdout).unwrap();
    let g = common::hospital();
    assert_eq!(stats["num_nodes"], g.num_nodes());
    assert_eq!(stats["num_times"], g.num_times());
    assert_eq!(stats["num_events"], g.num_events());
    let written = read_json(&dir.path().join("stats.json"));
    assert_eq!(written["stats"], stats);
    assert_eq!(written["config"]["window_seconds"], 600);
    assert!(written["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    assert!(dir.path().join("hospital_ward_contacts.json").exists());
}

#[test]
fn missing_input_fails_with_a_message() {
    let out = hosgns(&["ingest", "--input", "/definitely/not/here.dat"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not/here.dat"));
}

#[test]
fn zero_window_is_an_argument_error() {
    let data = common::hospital_path();
    let out = hosgns(&["ingest", "--input", data.to_str().unwrap(), "--window-seconds", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--window-seconds"));
}

#[test]
fn zero_window_in_the_config_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"window_seconds": 0}"#).unwrap();
    let data = common::hospital_path();
    let out = hosgns(&["--config", cfg.to_str().unwrap(), "ingest", "--input", data.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("window_seconds"));
}

#[test]
fn unknown_operator_lists_valid_names() {
    let out = hosgns(&["eval", "--embeddings", "nowhere", "--task", "classify", "--operator", "cosine"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["average", "hadamard", "weighted_l1", "weighted_l2", "concat"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn train_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::hospital_path();
    let out = dir.path().join("run");
    let mut args = vec!["train", "--input", data.to_str().unwrap(), "--tensor", "stat", "--seed", "1"];
    args.extend(["--output", out.to_str().unwrap()]);
    args.extend(SMALL);
    ok(&args);
    let first: Vec<Vec<u8>> =
        ["train.json", "run0/W.tsv", "run1/T.tsv", "run0/train_log.jsonl"].iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
    ok(&args);
    let second: Vec<Vec<u8>> =
        ["train.json", "run0/W.tsv", "run1/T.tsv", "run0/train_log.jsonl"].iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
    assert_eq!(first, second);
    assert_ne!(fs::read(out.join("run0/W.tsv")).unwrap(), fs::read(out.join("run1/W.tsv")).unwrap());
}

#[test]
fn statdyn_writes_four_factors_and_classify_reports_sir_params() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::hospital_path();
    let emb = dir.path().join("emb");
    let mut args = vec!["train", "--input", data.to_str().unwrap(), "--tensor", "statdyn", "--window", "2"];
    args.extend(["--output", emb.to_str().unwrap()]);
    args.extend(SMALL);
    ok(&args);
    for f in ["W", "C", "T", "S"] {
        assert!(emb.join(format!("run0/{f}.tsv")).exists(), "missing {f}");
    }
    let summary = read_json(&emb.join("train.json"));
    assert_eq!(summary["order"], 4);
    assert_eq!(summary["model"], "HOSGNS(statdyn)");

    let reports = dir.path().join("reports");
    let stdout = ok(&[
        "eval", "--embeddings", emb.to_str().unwrap(), "--task", "classify", "--beta", "0.5", "--mu", "0.01",
        "--splits", "2", "--operator", "concat", "--output", reports.to_str().unwrap(),
    ]);
    assert!(stdout.contains("macro-F1"));
    let report = read_json(&reports.join("classify_beta0.5_mu0.01.json"));
    assert_eq!(report["task"], "classification");
    assert_eq!(report["operator"], "concat");
    assert_eq!(report["params"]["beta"], 0.5);
    assert_eq!(report["params"]["mu"], 0.01);
    assert!(report["params"]["infection"].as_str().unwrap().contains("beta"));
    assert_eq!(report["scores"].as_array().unwrap().len(), 4);
    assert_eq!(report["seeds"]["runs"].as_array().unwrap().len(), 2);
    assert_eq!(report["config"]["tensor"], "statdyn");
    assert!(report["version"].is_string());
    let f1 = report["macro_f1_mean"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f1));
}

#[test]
fn reconstruction_report_from_an_ingested_graph() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::hospital_path();
    let gdir = dir.path().join("g");
    ok(&["ingest", "--input", data.to_str().unwrap(), "--output", gdir.to_str().unwrap()]);
    let graph = gdir.join("hospital_ward_contacts.json");
    let emb = dir.path().join("emb");
    let mut args = vec!["train", "--input", graph.to_str().unwrap(), "--output", emb.to_str().unwrap()];
    args.extend(SMALL);
    ok(&args);
    let reports = dir.path().join("reports");
    ok(&["eval", "--embeddings", emb.to_str().unwrap(), "--splits", "3", "--output", reports.to_str().unwrap()]);
    let report = read_json(&reports.join("reconstruct.json"));
    assert_eq!(report["task"], "reconstruction");
    assert_eq!(report["dataset"], "hospital_ward_contacts");
    assert_eq!(report["n_runs"], 2);
    assert_eq!(report["n_splits"], 3);
    assert_eq!(report["config"]["runs"], 2);
    assert!(report["params"].as_object().unwrap().is_empty());
}

#[test]
fn pmi_check_on_the_planted_fixture() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "pmi-check", "--planted", "1.5", "--dim", "4", "--kappa", "1", "--batch", "20000", "--iterations", "1500",
        "--precision", "double", "--output", dir.path().to_str().unwrap(),
    ]);
    let report = read_json(&dir.path().join("pmi_check.json"));
    assert!(report["r2"].as_f64().unwrap() > 0.99, "{report}");
    assert_eq!(report["pairs"], 80);
    assert_eq!(report["config"]["train"]["precision"], "double");
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::hospital_path();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("emb");
    let text = serde_json::json!({
        "input": data,
        "runs": 1,
        "seed": 5,
        "train": {"dim": 6, "iterations": 40, "batch": 500},
    });
    fs::write(&cfg, text.to_string()).unwrap();
    ok(&["--config", cfg.to_str().unwrap(), "train", "--dim", "3", "--output", out.to_str().unwrap()]);
    let summary = read_json(&out.join("train.json"));
    assert_eq!(summary["config"]["train"]["dim"], 3);
    assert_eq!(summary["config"]["train"]["iterations"], 40);
    assert_eq!(summary["config"]["seed"], 5);
    assert_eq!(summary["runs"].as_array().unwrap().len(), 1);
    assert!(fs::read_to_string(out.join("run0/W.tsv")).unwrap().starts_with("#W dim=3"));
}

#[test]
fn thread_count_comes_from_the_environment() {
    let data = common::hospital_path();
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hosgns"))
        .args(["ingest", "--input", data.to_str().unwrap(), "--output", dir.path().to_str().unwrap()])
        .env("HOSGNS_THREADS", "0")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("threads"));
}

use std::path::Path;
use std::process::{Command, Output};

fn docalign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_docalign")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = docalign(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_pipeline_through_the_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let ckpt = tmp.path().join("m.json");
    let log = tmp.path().join("m.csv");
    let pred = tmp.path().join("pred.jsonl");
    let report = tmp.path().join("report.json");

    ok(&[
        "gen",
        "--out",
        path(&data),
        "--n-docs",
        "80",
        "--dev-docs",
        "10",
        "--test-docs",
        "30",
        "--latent-dim",
        "16",
        "--vocab-size",
        "40",
        "--seed",
        "2",
    ]);
    ok(&[
        "train",
        "--data",
        path(&data),
        "--checkpoint",
        path(&ckpt),
        "--log",
        path(&log),
        "--simfn",
        "tk",
        "--k-policy",
        "half_min",
        "--epochs",
        "2",
        "--d-multi",
        "8",
        "--b",
        "4",
    ]);
    let csv = std::fs::read_to_string(&log).unwrap();
    assert_eq!(csv.lines().next(), Some("epoch,train_loss,dev_loss,dev_auc,lr"));
    assert_eq!(csv.lines().count(), 3);

    ok(&["predict", "--checkpoint", path(&ckpt), "--data", path(&data), "--split", "test", "--out", path(&pred)]);
    ok(&["eval", "--predictions", path(&pred), "--data", path(&data), "--split", "test", "--out", path(&report)]);
    let stdout = ok(&["eval", "--checkpoint", path(&ckpt), "--data", path(&data), "--split", "test", "--threads", "3"]);
    let from_file: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let from_stdout: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(from_file, from_stdout);
    assert_eq!(from_file["documents"], 30);

    let compared = ok(&["analyze", "--compare", path(&report), path(&report)]);
    let compared: serde_json::Value = serde_json::from_str(&compared).unwrap();
    assert_eq!(compared["spearman"], 1.0);

    let objdet = ok(&["baseline", "objdet", "--data", path(&data), "--split", "test"]);
    let objdet: serde_json::Value = serde_json::from_str(&objdet).unwrap();
    assert_eq!(objdet["sweep"].as_array().unwrap().len(), 20);
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nothing");
    let out = docalign(&["eval", "--checkpoint", path(&missing), "--data", path(&missing)]);
    assert_eq!(out.status.code(), Some(2));

    let config = tmp.path().join("bad.json");
    std::fs::write(&config, r#"{"simfn": "tk", "no_such_key": 1}"#).unwrap();
    let out = docalign(&["--config", path(&config), "train", "--data", path(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));

    let out = docalign(&["train", "--data", path(&missing), "--simfn", "tk"]);
    assert_eq!(out.status.code(), Some(2));
}

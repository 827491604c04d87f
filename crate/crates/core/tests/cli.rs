use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dltml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dltml"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = dltml(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const NETWORK: [&str; 10] = [
    "--root-speed", "5", "--load", "20", "--child", "4,30", "--child", "9,90", "--child", "2,140",
];

#[test]
fn solve_prints_homogeneous_example() {
    let out = ok(&["solve", "--root-speed", "100", "--load", "1", "--child", "100,1000", "--child", "100,1000"]);
    assert!(out.contains("0.571428571"));
    assert!(out.contains("0.285714286"));
    assert!(out.contains("0.142857143"));
}

#[test]
fn solve_machine_format_is_one_json_line() {
    let out = ok(&[
        "solve", "--root-speed", "100", "--load", "1", "--child", "100,1000", "--child", "100,1000", "--format",
        "machine",
    ]);
    assert_eq!(out.trim_end().lines().count(), 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    let alpha: Vec<f64> = serde_json::from_value(v["alpha"].clone()).unwrap();
    for (a, e) in alpha.iter().zip([4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0]) {
        assert!((a - e).abs() < 1e-12);
    }
    assert!((v["t_star"].as_f64().unwrap() - 4.0 / 7.0).abs() < 1e-12);
}

#[test]
fn solve_reads_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("net.cfg");
    std::fs::write(&cfg, "root_speed = 100\nload_gb = 1\nchild = 100, 1000\nchild = 100, 1000\n").unwrap();
    assert!(ok(&["solve", "--config", path(&cfg)]).contains("0.571428571"));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["solve", "--load", "1", "--child", "1,2"],
        vec!["solve", "--root-speed", "1", "--load", "1", "--child", "1"],
        vec!["solve", "--root-speed", "-1", "--load", "1", "--child", "1,2"],
        vec!["bogus"],
        vec!["generate", "--count", "10"],
    ] {
        let out = dltml(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"format\":\"something-else\"}\n").unwrap();
    let out = dltml(&["train", "--data", path(&bad), "--out", path(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(3));

    let missing = dir.path().join("missing.jsonl");
    let out = dltml(&["train", "--data", path(&missing), "--out", path(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    ok(&["generate", "--count", "1000", "--seed", "7", "--out", path(&a)]);
    ok(&["generate", "--count", "1000", "--seed", "7", "--out", path(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    let model = dir.path().join("m.json");
    let report = dir.path().join("report.json");
    let one = dir.path().join("one.json");
    ok(&["generate", "--count", "4000", "--seed", "7", "--out", path(&data)]);

    ok(&["train", "--data", path(&data), "--out", path(&one), "--max-epochs", "1", "--report", path(&report)]);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["epochs_run"], 1);
    assert_eq!(r["val_loss"].as_array().unwrap().len(), 1);

    ok(&[
        "train", "--data", path(&data), "--out", path(&model), "--max-epochs", "40", "--report", path(&report),
    ]);
    let mse = |split: &str| {
        let out = ok(&["evaluate", "--model", path(&model), "--data", path(&data), "--split", split, "--format", "machine"]);
        let v: Value = serde_json::from_str(out.lines().last().unwrap()).unwrap();
        v["rmse"].as_f64().unwrap().powi(2)
    };
    assert!(mse("train") <= mse("test"));

    let plots = dir.path().join("plots");
    ok(&[
        "evaluate", "--model", path(&model), "--data", path(&data), "--out", path(&plots), "--train-report",
        path(&report),
    ]);
    for f in [
        "fig2_loss_curve.csv",
        "fig3_predicted_vs_actual.csv",
        "fig7_load_bins.csv",
        "fig8_heterogeneity_bins.csv",
        "stratified.json",
        "summary.json",
    ] {
        assert!(plots.join(f).exists(), "{f}");
    }

    let mut args = vec!["predict", "--model", path(&model), "--format", "machine"];
    args.extend(NETWORK);
    let p: Value = serde_json::from_str(&ok(&args)).unwrap();
    let ml = p["t_star"].as_f64().unwrap();
    assert!(ml.is_finite());

    let mut args = vec!["solve", "--format", "machine"];
    args.extend(NETWORK);
    let exact: Value = serde_json::from_str(&ok(&args)).unwrap();

    let mut args = vec!["hybrid", "--model", path(&model), "--format", "machine", "--threshold", "0"];
    args.extend(NETWORK);
    let h: Value = serde_json::from_str(&ok(&args)).unwrap();
    assert_eq!(h["source"], "dlt-verified");
    assert_eq!(h["t_star"], exact["t_star"]);
    assert_eq!(h["ml_estimate"].as_f64().unwrap(), ml);
    assert_eq!(h["threshold"].as_f64().unwrap(), 0.0);

    let mut args = vec!["hybrid", "--model", path(&model), "--format", "machine", "--threshold", "1e12"];
    args.extend(NETWORK);
    let h: Value = serde_json::from_str(&ok(&args)).unwrap();
    if ml > 0.0 {
        assert_eq!(h["source"], "ml");
        assert_eq!(h["t_star"].as_f64().unwrap(), ml);
    }

    let other = dir.path().join("other.jsonl");
    ok(&["generate", "--count", "1000", "--seed", "8", "--out", path(&other)]);
    let out = dltml(&["evaluate", "--model", path(&model), "--data", path(&other)]);
    assert_eq!(out.status.code(), Some(3));
}

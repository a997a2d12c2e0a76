use std::path::Path;
use std::process::{Command, Output};

fn nhc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = nhc(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

/// Train/test blob files and a trained checkpoint under `dir`.
fn fixture(dir: &Path) -> (String, String, String) {
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    let (train, test, model) = (p("train.csv"), p("test.csv"), p("model.json"));
    ok(&[
        "gen-data",
        "--out",
        &train,
        "--per-class",
        "60",
        "--split",
        "train",
        "--seed",
        "3",
    ]);
    ok(&[
        "gen-data",
        "--out",
        &test,
        "--per-class",
        "60",
        "--split",
        "test",
        "--seed",
        "3",
    ]);
    let stdout = ok(&[
        "train", "--data", &train, "--out", &model, "--epochs", "30", "--seed", "3",
    ]);
    assert!(stdout.contains("train_accuracy="));
    (train, test, model)
}

#[test]
fn nhc_eval_writes_scores_curves_and_cdfs() {
    let dir = tempfile::tempdir().unwrap();
    let (_, test, model) = fixture(dir.path());
    let out = dir.path().join("eval");
    let stdout = ok(&[
        "nhc-eval",
        "--model",
        &model,
        "--data",
        &test,
        "--strength",
        "0.2",
        "--strength",
        "0.4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(stdout.contains("nhc_l0.2 mean_confidence="));
    assert_eq!(
        first_line(&out.join("scores.csv")),
        "index,label,prediction,estimator,strength,confidence"
    );
    assert_eq!(
        first_line(&out.join("threshold_nhc_l0.4.csv")),
        "threshold,accuracy,kept_count"
    );
    assert_eq!(
        first_line(&out.join("cdf_nhc_l0.2.csv")),
        "confidence,cumulative_fraction"
    );
    let rows = std::fs::read_to_string(out.join("scores.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 2 * 90);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (_, test, model) = fixture(dir.path());
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "nhc-eval",
            "--model",
            &model,
            "--data",
            &test,
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        std::fs::read(out.join("scores.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn abc_eval_exports_json() {
    let dir = tempfile::tempdir().unwrap();
    let (_, test, model) = fixture(dir.path());
    let out = dir.path().join("abc");
    ok(&[
        "abc-eval",
        "--model",
        &model,
        "--data",
        &test,
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
    assert_eq!(json["num_samples"], 7);
    assert_eq!(json["variants"][0]["variant"], "abc");
}

#[test]
fn attack_sweep_reports_each_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let (_, test, model) = fixture(dir.path());
    let out = dir.path().join("adv");
    ok(&[
        "attack-sweep",
        "--model",
        &model,
        "--data",
        &test,
        "--estimator",
        "nhc",
        "--estimator",
        "abc",
        "--epsilons",
        "0,0.5,1",
        "--max-points",
        "20",
        "--out",
        out.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(out.join("adv_sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epsilon,mean_confidence,accuracy,estimator,strength");
    assert_eq!(lines.len(), 1 + 6);
    assert!(lines[4].starts_with("0,") && lines[4].ends_with(",abc,"));
}

#[test]
fn shifted_and_ood_regimes_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let shifted = dir.path().join("shifted.csv");
    let ood = dir.path().join("ood.csv");
    ok(&[
        "gen-data",
        "--regime",
        "shifted",
        "--translate",
        "-1,2",
        "--out",
        shifted.to_str().unwrap(),
    ]);
    ok(&[
        "gen-data",
        "--regime",
        "ood",
        "--ood-points",
        "25",
        "--out",
        ood.to_str().unwrap(),
    ]);
    assert!(first_line(&shifted).contains("regime=shifted"));
    let text = std::fs::read_to_string(&ood).unwrap();
    assert!(text.lines().next().unwrap().contains("regime=ood"));
    assert_eq!(text.lines().count(), 2 + 25);
    assert!(text.lines().skip(2).all(|l| l.ends_with(',')));
}

#[test]
fn report_runs_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.json");
    std::fs::write(
        &config,
        r#"{
  "seed": 4,
  "model": {"epochs": 15},
  "data": {"per_class": 30, "ood_points": 30},
  "estimators": [{"kind": "nhc", "strength": 0.4}, {"kind": "abc"}],
  "protocol": ["shift", "ood"]
}"#,
    )
    .unwrap();
    let out = dir.path().join("report");
    let stdout = ok(&[
        "report",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(stdout.contains("accuracy[shifted]="));
    assert!(out.join("shift_nhc_l0.4.csv").exists());
    assert!(out.join("ood_abc_ood.csv").exists());
}

#[test]
fn bad_inputs_fail_with_messages() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(
        &config,
        r#"{"seed": 1, "estimators": [{"kind": "nhc", "num_samples": 7}, {"kind": "abc", "num_samples": 5}], "protocol": ["shift"]}"#,
    )
    .unwrap();
    let out = nhc(&[
        "report",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("estimators[1].num_samples"));

    let missing = nhc(&[
        "nhc-eval",
        "--model",
        "/nonexistent.json",
        "--data",
        "x.csv",
        "--out",
        "o",
    ]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("cannot load model"));

    let bad_format = nhc(&[
        "abc-eval", "--model", "m", "--data", "d", "--out", "o", "--format", "xml",
    ]);
    assert!(!bad_format.status.success());
}

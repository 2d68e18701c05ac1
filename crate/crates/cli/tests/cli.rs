use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scma-ntn"))
        .arg("--output-dir")
        .arg(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> Option<i32> {
    out.status.code()
}

#[test]
fn channel_generation_is_deterministic_and_splits_train_from_test() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(a.path(), &["gen-channel", "--symbols", "200"]);
    ok(b.path(), &["gen-channel", "--symbols", "200"]);
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(a.path(), "channel_train.csv"), read(b.path(), "channel_train.csv"));
    assert_eq!(read(a.path(), "channel_test.csv"), read(b.path(), "channel_test.csv"));
    assert_ne!(read(a.path(), "channel_train.csv"), read(a.path(), "channel_test.csv"));
    assert!(a.path().join("gen-channel.manifest.json").exists());
}

#[test]
fn training_writes_loadable_weights_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-channel", "--symbols", "200"]);
    let small = ["--profile", "small", "--minibatches", "2", "--minibatch-size", "16"];
    ok(d, &[&["train", "--epochs", "3"][..], &small].concat());
    let history = std::fs::read_to_string(d.join("loss_history.csv")).unwrap();
    assert_eq!(history.lines().next(), Some("epoch,loss,lr"));
    assert_eq!(history.lines().count(), 1 + 3);

    ok(d, &[&["train", "--epochs", "2", "--resume"][..], &small].concat());
    let history = std::fs::read_to_string(d.join("loss_history.csv")).unwrap();
    let epochs: Vec<&str> = history.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(epochs, ["1", "2", "3", "4", "5"]);

    // the weights must load into the detector used by evaluate
    ok(d, &["evaluate", "--profile", "small", "--receiver", "cnn", "--trials", "1", "--grid", "0"]);
    assert!(d.join("bler_cnn_high.csv").exists());
    // and be rejected by a different architecture
    let out = run(d, &["evaluate", "--profile", "full", "--receiver", "cnn", "--trials", "1", "--grid", "0"]);
    assert!(!out.status.success());
}

#[test]
fn resume_without_weights_is_a_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-channel", "--symbols", "100"]);
    let out = run(dir.path(), &["train", "--profile", "small", "--epochs", "1", "--resume"]);
    assert_eq!(code(&out), Some(3));
}

#[test]
fn cnn_evaluation_without_weights_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-channel", "--symbols", "100"]);
    let out = run(dir.path(), &["evaluate", "--receiver", "cnn", "--trials", "1", "--grid", "0"]);
    assert_eq!(code(&out), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("weights"));
}

#[test]
fn missing_channel_dataset_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["evaluate", "--receiver", "logmpa", "--trials", "1", "--grid", "0"]);
    assert_eq!(code(&out), Some(3));
}

#[test]
fn bad_configuration_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[sweep]\ntrails = 10\n").unwrap();
    let out = run(dir.path(), &["--config", cfg.to_str().unwrap(), "complexity"]);
    assert_eq!(code(&out), Some(2));

    std::fs::write(&cfg, "numerology = 1\n").unwrap();
    let out = run(dir.path(), &["--config", cfg.to_str().unwrap(), "complexity"]);
    assert_eq!(code(&out), Some(2));

    let out = run(dir.path(), &["evaluate", "--receiver", "nope"]);
    assert_eq!(code(&out), Some(2));
}

#[test]
fn logmpa_sweep_then_throughput_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-channel", "--symbols", "200"]);
    ok(d, &["evaluate", "--receiver", "logmpa", "--trials", "4", "--grid", "-8,6"]);
    let csv = d.join("bler_logmpa_high.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("ebn0_db,bler,ci_lo,ci_hi,att_bps,n_trials"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], -8.0);
    assert_eq!(rows[0][1], 1.0);
    assert_eq!(rows[1][1], 0.0);
    assert_eq!(rows[1][4], 6.0 * 168.0 / 1e-3);
    assert!(d.join("bler_logmpa_high.manifest.json").exists());

    let out = ok(d, &["throughput", csv.to_str().unwrap()]);
    assert!(out.contains("1008000"), "{out}");

    ok(d, &["compare", csv.to_str().unwrap(), csv.to_str().unwrap()]);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("delta.json")).unwrap()).unwrap();
    assert_eq!(report["delta_db"].as_f64(), Some(0.0));
}

#[test]
fn complexity_report_totals() {
    let dir = tempfile::tempdir().unwrap();
    let total = |profile: &str| {
        ok(dir.path(), &["complexity", "--profile", profile]);
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("complexity.json")).unwrap()).unwrap();
        (v["cnn"]["total"].as_u64().unwrap(), v["log_mpa"]["multiplications"].as_u64().unwrap())
    };
    let (full, mults) = total("full");
    assert_eq!(full, 7_910_400);
    assert_eq!(mults, 23_233);
    let (small, _) = total("small");
    assert!(small < full);
}

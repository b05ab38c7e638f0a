//! Command-line behaviour: exit codes, outputs and error messages.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use relm::controller::{read_metrics_csv, Phase};

fn relm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relm")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const QUICK: [&str; 6] = [
    "--set",
    "cmaes.max_generations=10",
    "--set",
    "recalibration.max_generations=10",
    "--set",
    "latent.mute=true",
];

fn synth(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec!["synth", "--out", s(&path), "--rows-per-period", "200"];
    args.extend_from_slice(extra);
    let out = relm(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    path
}

fn train(dir: &Path, data: &Path) -> PathBuf {
    let model = dir.join("model.relm");
    let metrics = dir.join("train-metrics.csv");
    let mut args = vec![
        "train",
        "--data",
        s(data),
        "--model-out",
        s(&model),
        "--metrics-out",
        s(&metrics),
        "--seed",
        "3",
    ];
    args.extend_from_slice(&QUICK);
    let out = relm(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    model
}

#[test]
fn help_documents_exit_codes() {
    for args in [vec!["--help"], vec!["train", "--help"], vec!["drift", "--help"]] {
        let out = relm(&args);
        assert_eq!(code(&out), 0);
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("Exit codes:"), "{args:?}");
        assert!(text.contains("20  drift: verdict recalibrate"), "{args:?}");
    }
}

#[test]
fn bad_usage_exits_2() {
    assert_eq!(code(&relm(&[])), 2);
    assert_eq!(code(&relm(&["train", "--data"])), 2);
    assert_eq!(code(&relm(&["frobnicate"])), 2);
}

#[test]
fn missing_data_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let p_m = dir.path().join("m");
    let p_x = dir.path().join("x");
    let missing = dir.path().join("nope.csv");
    let out = relm(&[
        "train",
        "--data",
        s(&missing),
        "--model-out",
        s(&p_m),
        "--metrics-out",
        s(&p_x),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("nope.csv"), "{}", stderr(&out));
    assert!(!dir.path().join("m").exists());
}

#[test]
fn synth_is_deterministic_and_shaped() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(dir.path(), "a.csv", &["--periods", "3", "--seed", "5"]);
    let b = synth(dir.path(), "b.csv", &["--periods", "3", "--seed", "5"]);
    let c = synth(dir.path(), "c.csv", &["--periods", "3", "--seed", "6"]);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_ne!(text, std::fs::read_to_string(&c).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x0,x1,label,period"));
    assert_eq!(lines.count(), 600);
}

#[test]
fn invalid_synth_spec_exits_8() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("x.csv");
    let out = relm(&["synth", "--out", s(&out_path), "--blobs", "1"]);
    assert_eq!(code(&out), 8);
    let out = relm(&["synth", "--out", s(&out_path), "--drift", "wobble"]);
    assert_eq!(code(&out), 8);
    assert!(stderr(&out).contains("wobble"));
}

#[test]
fn invalid_config_exits_6() {
    let dir = tempfile::tempdir().unwrap();
    let p_m = dir.path().join("m");
    let p_x = dir.path().join("x");
    let data = synth(dir.path(), "d.csv", &[]);
    let base = [
        "train",
        "--data",
        s(&data),
        "--model-out",
        s(&p_m),
        "--metrics-out",
        s(&p_x),
    ];
    let mut args = base.to_vec();
    args.extend(["--set", "cmaes.no_such_key=1"]);
    let out = relm(&args);
    assert_eq!(code(&out), 6);
    assert!(stderr(&out).contains("cmaes.no_such_key"));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[env]\nnew_fraction = 1.5\n").unwrap();
    let mut args = base.to_vec();
    args.extend(["--config", s(&cfg)]);
    assert_eq!(code(&relm(&args)), 6);
}

#[test]
fn single_label_training_data_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let p_m = dir.path().join("m");
    let p_x = dir.path().join("x");
    let data = dir.path().join("one.csv");
    std::fs::write(&data, "x0,x1,label\n1,2,1\n3,4,1\n5,6,1\n").unwrap();
    let out = relm(&[
        "train",
        "--data",
        s(&data),
        "--model-out",
        s(&p_m),
        "--metrics-out",
        s(&p_x),
    ]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("only label 1"), "{}", stderr(&out));
}

#[test]
fn corrupt_model_and_schema_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.csv", &["--periods", "2", "--seed", "2"]);
    let model = train(dir.path(), &data);

    let mut bytes = std::fs::read(&model).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    let corrupt = dir.path().join("corrupt.relm");
    std::fs::write(&corrupt, &bytes).unwrap();
    let out = relm(&["evaluate", "--model", s(&corrupt), "--data", s(&data)]);
    assert_eq!(code(&out), 5);
    assert!(stderr(&out).contains("checksum"), "{}", stderr(&out));

    let other = dir.path().join("other.csv");
    std::fs::write(&other, "a,b,label\n1,2,0\n3,4,1\n").unwrap();
    let out = relm(&["evaluate", "--model", s(&model), "--data", s(&other)]);
    assert_eq!(code(&out), 4);
}

#[test]
fn train_evaluate_drift_stream() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.csv", &["--periods", "2", "--seed", "4"]);
    let model = train(dir.path(), &data);

    let train_rows = read_metrics_csv(&std::fs::read_to_string(dir.path().join("train-metrics.csv")).unwrap()).unwrap();
    assert_eq!(train_rows.len(), 10);
    assert!(train_rows.iter().all(|r| r.phase == Phase::Initial));

    let report = dir.path().join("eval.csv");
    let out = relm(&["evaluate", "--model", s(&model), "--data", s(&data), "--report-out", s(&report)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("metric,value\nrows,400\naccuracy,"), "{text}");

    // Same distribution, fresh sample: no drift.
    let same = synth(dir.path(), "same.csv", &["--periods", "2", "--seed", "40"]);
    let drift_report = dir.path().join("drift.csv");
    let out = relm(&["drift", "--model", s(&model), "--data", s(&same), "--report-out", s(&drift_report)]);
    assert_eq!(code(&out), 0, "{}", std::fs::read_to_string(&drift_report).unwrap());

    let shifted = synth(
        dir.path(),
        "shifted.csv",
        &["--periods", "2", "--drift-period", "0", "--drift", "mean-shift", "--magnitude", "4", "--seed", "41"],
    );
    let out = relm(&["drift", "--model", s(&model), "--data", s(&shifted), "--report-out", s(&drift_report)]);
    assert_eq!(code(&out), 20);
    let text = std::fs::read_to_string(&drift_report).unwrap();
    assert!(text.contains("verdict,recalibrate"), "{text}");
    assert!(text.contains("psi_s0,"), "{text}");

    let streamed = dir.path().join("streamed.relm");
    let metrics = dir.path().join("metrics.csv");
    let out = relm(&[
        "stream",
        "--model",
        s(&model),
        "--data",
        s(&shifted),
        "--model-out",
        s(&streamed),
        "--metrics-out",
        s(&metrics),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = read_metrics_csv(&std::fs::read_to_string(&metrics).unwrap()).unwrap();
    let streaming = rows.iter().filter(|r| r.phase == Phase::Streaming).count();
    assert_eq!(streaming, 2, "one step per period tag");
    assert!(rows.iter().any(|r| r.phase == Phase::Recalibrating));
    assert!(rows.windows(2).all(|w| w[0].step < w[1].step));
}

#[test]
fn stream_on_training_distribution_does_not_recalibrate() {
    let dir = tempfile::tempdir().unwrap();
    let p_s_relm = dir.path().join("s.relm");
    let data = synth(dir.path(), "d.csv", &["--periods", "2", "--seed", "8"]);
    let model = train(dir.path(), &data);
    let more = synth(dir.path(), "more.csv", &["--periods", "3", "--seed", "80"]);
    let metrics = dir.path().join("metrics.csv");
    let out = relm(&[
        "stream",
        "--model",
        s(&model),
        "--data",
        s(&more),
        "--model-out",
        s(&p_s_relm),
        "--metrics-out",
        s(&metrics),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = read_metrics_csv(&std::fs::read_to_string(&metrics).unwrap()).unwrap();
    assert!(!rows.iter().any(|r| r.phase == Phase::Recalibrating));
}

#[test]
fn checkpoint_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let p_m_relm = dir.path().join("m.relm");
    let p_x_csv = dir.path().join("x.csv");
    let data = synth(dir.path(), "d.csv", &["--periods", "2"]);
    let checkpoint = dir.path().join("ckpt.relm");
    let mut args = vec![
        "train",
        "--data",
        s(&data),
        "--model-out",
        s(&p_m_relm),
        "--metrics-out",
        s(&p_x_csv),
        "--checkpoint",
        s(&checkpoint),
    ];
    args.extend_from_slice(&QUICK);
    assert_eq!(code(&relm(&args)), 0);
    let out = relm(&["evaluate", "--model", s(&checkpoint), "--data", s(&data)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

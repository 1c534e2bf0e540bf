use std::path::Path;
use std::process::{Command, Output};

fn entstruct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entstruct"))
        .args(args)
        .output()
        .expect("spawn entstruct")
}

fn ok(args: &[&str]) -> Output {
    let out = entstruct(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, extra: &[&str]) -> Vec<u8> {
    let mut args = vec![
        "gen",
        "--n",
        "4",
        "--per-comp",
        "600",
        "--seed",
        "11",
        "--out",
        s(dir),
    ];
    args.extend_from_slice(extra);
    ok(&args);
    std::fs::read(dir.join("dataset.txt")).unwrap()
}

#[test]
fn gen_writes_expected_record_count_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = gen(a.path(), &[]);
    let second = gen(b.path(), &[]);
    assert_eq!(first, second);
    let text = String::from_utf8(first).unwrap();
    // one header line plus 8 compositions x 600 samples
    assert_eq!(text.lines().count(), 1 + 4800);
    assert!(a.path().join("manifest-gen.json").exists());
}

#[test]
fn gen_is_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(
        gen(a.path(), &["--threads", "1"]),
        gen(b.path(), &["--threads", "4"])
    );
}

#[test]
fn single_qubit_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = entstruct(&["gen", "--n", "1", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_dataset_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    let out = entstruct(&["train", "--data", s(&missing), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.txt"));
}

#[test]
fn train_eval_sweep_bounds_predict() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, &[]);
    let data = d.join("dataset.txt");
    ok(&[
        "train",
        "--data",
        s(&data),
        "--arch",
        "ghz",
        "--epochs",
        "3",
        "--out",
        s(d),
    ]);

    let model = std::fs::read_to_string(d.join("model.txt")).unwrap();
    let header: serde_json::Value = serde_json::from_str(model.lines().next().unwrap()).unwrap();
    assert_eq!(header["layer_dims"], serde_json::json!([4, 32, 5]));
    assert_eq!(header["training"]["epochs_run"], 3);
    let history = std::fs::read_to_string(d.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1 + 3);

    let model_path = d.join("model.txt");
    ok(&[
        "eval",
        "--model",
        s(&model_path),
        "--data",
        s(&data),
        "--out",
        s(d),
    ]);
    let eval: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("eval.json")).unwrap()).unwrap();
    let acc = eval["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));

    ok(&[
        "sweep",
        "--model",
        s(&model_path),
        "--kind",
        "noised-ghz",
        "--points",
        "101",
        "--out",
        s(d),
    ]);
    let sweep = d.join("sweep-noised-ghz.csv");
    assert_eq!(std::fs::read_to_string(&sweep).unwrap().lines().count(), 1 + 101);

    ok(&["bounds", "--sweep", s(&sweep), "--n", "4", "--out", s(d)]);
    let bounds = std::fs::read_to_string(d.join("bounds.csv")).unwrap();
    assert_eq!(bounds.lines().count(), 1 + 4);

    let input = d.join("measured.csv");
    std::fs::write(
        &input,
        "state_id,n,mz,mx,az,ax,true_m,true_d\nghz,4,1,1,-1,0.0625,1,4\nblank,4,0.2,0.1,0,0,,\n",
    )
    .unwrap();
    ok(&[
        "predict",
        "--model",
        s(&model_path),
        "--input",
        s(&input),
        "--out",
        s(d),
    ]);
    let preds = std::fs::read_to_string(d.join("predictions.csv")).unwrap();
    assert_eq!(preds.lines().count(), 3);
    for cmd in ["gen", "train", "eval", "sweep", "bounds", "predict"] {
        assert!(d.join(format!("manifest-{cmd}.json")).exists(), "{cmd}");
    }
}

#[test]
fn predict_names_the_malformed_row() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, &[]);
    ok(&[
        "train",
        "--data",
        s(&d.join("dataset.txt")),
        "--epochs",
        "1",
        "--out",
        s(d),
    ]);
    let input = d.join("measured.csv");
    std::fs::write(
        &input,
        "state_id,n,mz,mx,az,ax,true_m,true_d\ngood,4,1,1,-1,0.0625,1,4\nbroken,4,0.5,oops,0,0,,\n",
    )
    .unwrap();
    let out = entstruct(&[
        "predict",
        "--model",
        s(&d.join("model.txt")),
        "--input",
        s(&input),
        "--out",
        s(d),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("broken"), "{err}");
}

#[test]
fn base_arch_defaults_to_preset_epochs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "--n", "4", "--per-comp", "6", "--seed", "1", "--out", s(d)]);
    ok(&["train", "--data", s(&d.join("dataset.txt")), "--out", s(d)]);
    let model = std::fs::read_to_string(d.join("model.txt")).unwrap();
    let header: serde_json::Value = serde_json::from_str(model.lines().next().unwrap()).unwrap();
    assert_eq!(header["training"]["epochs_run"], 500);
    assert_eq!(header["layer_dims"], serde_json::json!([4, 32, 32, 5]));
}

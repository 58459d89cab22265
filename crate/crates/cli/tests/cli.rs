use std::fs;
use std::path::Path;
use std::process::Command;

fn sdgg(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sdgg"))
        .args(args)
        .env_remove("SDGG_SEED")
        .output()
        .unwrap()
}

fn mutag() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/MUTAG")
        .display()
        .to_string()
}

#[test]
fn unknown_key_exits_with_config_code() {
    let out = sdgg(&["train", "--set", "no_such_key=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
}

#[test]
fn bad_config_file_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, "lambda = [").unwrap();
    let out = sdgg(&["train", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_dataset_exits_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("NOPE").display().to_string();
    let set = format!("dataset_dir={missing:?}");
    let out = sdgg(&["trials", "--set", &set, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn eval_without_checkpoint_exits_with_runtime_code() {
    let dir = tempfile::tempdir().unwrap();
    let set = format!("dataset_dir={:?}", mutag());
    let out = sdgg(&["eval", "--set", &set, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn train_and_eval_on_mutag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!("dataset_dir = {:?}\nepochs = 1\nmethod = \"ati\"\n", mutag()),
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let args = ["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()];

    let out = sdgg(&[&["train"], &args[..]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("checkpoint.json").exists());

    let out = sdgg(&[&["eval"], &args[..]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("AUC"), "{summary}");
    assert!(out_dir.join("metrics.json").exists());
}

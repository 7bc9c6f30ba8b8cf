mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kgef(args: &[&str], out: &Path) -> Output {
    let config = common::fixtures().join("pipeline/kgef.toml");
    Command::new(env!("CARGO_BIN_EXE_kgef"))
        .args(args)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "error")
        .output()
        .expect("kgef runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_through(stages: &[&str], out: &Path) {
    for stage in stages {
        let o = kgef(&[stage], out);
        assert!(o.status.success(), "{stage} failed: {}", stderr(&o));
    }
}

#[test]
fn missing_predecessor_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = kgef(&["build"], dir.path());
    assert!(!o.status.success());
    let msg = stderr(&o);
    assert!(msg.contains("`align`") && msg.contains("has not run"), "{msg}");
    assert!(!dir.path().join("graph.quads").exists());
}

#[test]
fn changed_input_makes_successors_stale() {
    let dir = tempfile::tempdir().unwrap();
    run_through(&["ingest", "align"], dir.path());
    let records = dir.path().join("ingest/records.jsonl");
    let mut text = fs::read_to_string(&records).unwrap();
    text.push('\n');
    fs::write(&records, text).unwrap();

    let o = kgef(&["classify"], dir.path());
    assert!(!o.status.success());
    let msg = stderr(&o);
    assert!(msg.contains("rerun `kgef ingest`") || msg.contains("rerun `kgef align`"), "{msg}");
}

#[test]
fn all_models_for_one_portion() {
    let dir = tempfile::tempdir().unwrap();
    run_through(&["ingest", "align", "classify", "build"], dir.path());
    let o = kgef(&["train", "--model", "all", "--portion", "GR"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let mut params: Vec<String> = fs::read_dir(dir.path().join("models/GR"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".params"))
        .collect();
    params.sort();
    assert_eq!(params, ["DistMult.params", "RESCAL.params", "TransE.params", "TransR.params"]);
    assert!(!dir.path().join("models/WD").exists());
}

#[test]
fn single_model_and_unknown_model() {
    let dir = tempfile::tempdir().unwrap();
    run_through(&["ingest", "align", "classify", "build"], dir.path());
    let o = kgef(&["train", "--model", "TransE", "--portion", "OL"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<String> = fs::read_dir(dir.path().join("models/OL"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".params"))
        .collect();
    assert_eq!(names, ["TransE.params"]);

    let o = kgef(&["train", "--model", "ComplEx"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn seed_override_changes_models_not_tables() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, seed) in [(&a, "42"), (&b, "7")] {
        run_through(&["ingest", "align", "classify", "build", "stats"], dir.path());
        let o = kgef(&["train", "--model", "DistMult", "--portion", "GR", "--seed", seed], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |d: &tempfile::TempDir, f: &str| fs::read(d.path().join(f)).unwrap();
    assert_eq!(read(&a, "report/stats.csv"), read(&b, "report/stats.csv"));
    assert_eq!(read(&a, "graph.quads"), read(&b, "graph.quads"));
    assert_ne!(read(&a, "models/GR/DistMult.params"), read(&b, "models/GR/DistMult.params"));
}

#[test]
fn bad_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "sources_dir = \"nowhere\"\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_kgef"))
        .args(["ingest", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).contains("config"), "{}", stderr(&o));
}

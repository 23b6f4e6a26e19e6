use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn trisys(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trisys"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("spawn trisys")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = trisys(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn corpus_train_campaign_table_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["make-corpus", "--out", "corpus", "--episodes", "2", "--scenarios", "ordered,fallen"]);
    assert!(d.join("corpus/frames.jsonl").exists());
    ok(d, &["train-critic", "--frames", "corpus/frames.jsonl", "--out", "critic", "--epochs", "5", "--heldout-every", "2"]);
    assert!(d.join("critic/metrics.json").exists());

    let table = ok(
        d,
        &[
            "run-campaign", "--out", "run", "--episodes", "1", "--scenarios", "ordered",
            "--critic", "learned", "--critic-path", "critic/critic.json", "--n-stag", "90",
        ],
    );
    assert_eq!(table.lines().count(), 4);
    assert_eq!(fs::read_to_string(d.join("run/table.csv")).unwrap(), table);
    let cfg = fs::read_to_string(d.join("run/config.toml")).unwrap();
    assert!(cfg.contains("n_stag = 90"), "{cfg}");
    assert_eq!(ok(d, &["emit-table", "--report", "run/report.json"]), table);
}

#[test]
fn annotate_reproduces_corpus_segmentation() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["make-corpus", "--out", "c", "--episodes", "1", "--scenarios", "scattered"]);
    ok(d, &["annotate", "--trajectories", "c/trajectories", "--reference", "c/truth", "--out", "a", "--delta-t", "5"]);
    let ours = fs::read_to_string(d.join("a/scattered-000.ann")).unwrap();
    let theirs = fs::read_to_string(d.join("c/annotated/scattered-000.ann")).unwrap();
    assert_eq!(ours, theirs);
}

#[test]
fn ablation_writes_report_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(tmp.path(), &["ablation", "--out", "abl", "--episodes", "2"]);
    assert_eq!(out.lines().count(), 4);
    let manifest = fs::read_to_string(tmp.path().join("abl/manifest.json")).unwrap();
    assert!(manifest.contains("ablation.json"));
}

#[test]
fn invalid_settings_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = trisys(tmp.path(), &["run-campaign", "--out", "x", "--n-stag", "0"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_stag"));
    let out = trisys(tmp.path(), &["run-campaign", "--out", "x", "--scenarios", "kitchen"]);
    assert!(!out.status.success());
}

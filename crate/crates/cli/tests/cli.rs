use std::path::Path;
use std::process::{Command, Output};

fn mrta(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrta"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = mrta(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

const TINY: &str = "n_robots = 3\nla_len = 2\nepisode_tasks = 12\ncycles = 2\nepisodes_per_cycle = 2\ndataset_pool = 2\n";

#[test]
fn generate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--dist", "gaussian", "--n", "40", "--seed", "5", "--out", "a.jsonl"]);
    ok(d, &["generate", "--dist", "gaussian", "--n", "40", "--seed", "5", "--out", "b.jsonl"]);
    ok(d, &["generate", "--dist", "uniform", "--n", "40", "--seed", "5", "--out", "c.jsonl"]);
    assert_eq!(read(d, "a.jsonl"), read(d, "b.jsonl"));
    assert_ne!(read(d, "a.jsonl"), read(d, "c.jsonl"));
    assert_eq!(String::from_utf8(read(d, "a.jsonl")).unwrap().lines().count(), 40);
}

#[test]
fn train_evaluate_compare_pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cfg.toml"), TINY).unwrap();
    std::fs::create_dir(d.join("data")).unwrap();
    for s in ["1", "2"] {
        ok(d, &["generate", "--dist", "gaussian", "--n", "12", "--seed", s, "--out", &format!("data/{s}.jsonl")]);
    }
    ok(d, &["train", "--config", "cfg.toml", "--out", "a.ckpt"]);
    ok(d, &["train", "--config", "cfg.toml", "--out", "b.ckpt"]);
    assert_eq!(read(d, "a.ckpt"), read(d, "b.ckpt"));
    assert_eq!(read(d, "a.ckpt.curve.csv"), read(d, "b.ckpt.curve.csv"));
    let curve = String::from_utf8(read(d, "a.ckpt.curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 4);

    let eval = |out: &str| {
        ok(d, &[
            "evaluate", "--policy", "mrtagent", "--ckpt", "a.ckpt", "--data", "data/*.jsonl",
            "--seeds", "1,2,3", "--config", "cfg.toml", "--out", out,
        ])
    };
    let table = eval("m1.csv");
    assert_eq!(eval("m2.csv"), table);
    assert_eq!(read(d, "m1.csv"), read(d, "m2.csv"));
    assert!(table.contains('±'));
    assert_eq!(String::from_utf8(read(d, "m1.csv")).unwrap().lines().count(), 1 + 2 * 3);

    let fifo = ok(d, &["evaluate", "--policy", "fifo", "--data", "data/*.jsonl", "--config", "cfg.toml", "--out", "f.csv"]);
    assert!(!fifo.contains('±'));
    ok(d, &["evaluate", "--policy", "bfo", "--data", "data/*.jsonl", "--config", "cfg.toml", "--out", "b.csv"]);
    let summary = ok(d, &["compare", "--in", "m1.csv", "f.csv", "b.csv"]);
    assert_eq!(summary, ok(d, &["compare", "--in", "m1.csv", "f.csv", "b.csv"]));
    assert!(summary.contains("mrtagent vs fifo"));
    assert!(summary.contains("fifo vs bfo"));
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.toml"), "n_robots = 3\nbogus = 1\n").unwrap();
    let out = mrta(d, &["train", "--config", "bad.toml", "--out", "x.ckpt"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    ok(d, &["generate", "--dist", "uniform", "--n", "5", "--seed", "1", "--out", "d.jsonl"]);
    assert!(!mrta(d, &["evaluate", "--policy", "mrtagent", "--data", "d.jsonl", "--out", "o.csv"]).status.success());
    assert!(!mrta(d, &["evaluate", "--policy", "fifo", "--data", "none*.jsonl", "--out", "o.csv"]).status.success());
    std::fs::write(d.join("junk.ckpt"), b"MRTAGENT").unwrap();
    let out = mrta(d, &["evaluate", "--policy", "mrtagent", "--ckpt", "junk.ckpt", "--data", "d.jsonl", "--out", "o.csv"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("corrupt"));
}

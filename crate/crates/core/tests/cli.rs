use std::path::Path;
use std::process::{Command, Output};

fn pulsegrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pulsegrid")).args(args).env_remove("PULSEGRID_SEED").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = pulsegrid(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn report_from_published_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let text = ok(&[
        "report", "--from", "tables",
        "--bhs", "90,97,100", "--bhs", "88,95,100", "--bhs", "84,90,93",
        "--aami", "-0.100,4.201,443", "--aami", "-0.154,4.629,443", "--aami", "-0.291,8.831,443",
        "--out", s(&out),
    ]);
    let verdicts: Vec<&str> = text.lines().map(|l| l.rsplit("-> ").next().unwrap()).collect();
    assert_eq!(verdicts, ["A", "A", "B", "pass", "pass", "fail(sd)"]);
    assert_eq!(std::fs::read_to_string(out.join("report.txt")).unwrap(), text);
    assert!(out.join("manifest.kv").exists());
}

#[test]
fn unknown_flag_exits_one_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let res = pulsegrid(&["evaluate", "--bogus", "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(!out.exists());
    let res = pulsegrid(&["report", "--from", "tables", "--bhs", "1,2", "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn full_pipeline_on_a_small_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("records");
    let ds = dir.path().join("feat/dataset.txt");
    let models = dir.path().join("models");
    let eval = dir.path().join("eval");
    ok(&["synth", "--subjects", "10", "--seed", "4", "--format", "binary", "--out", s(&rec)]);
    assert!(rec.join("ground_truth.gt").exists() && rec.join("manifest.kv").exists());

    let peaks = ok(&["peaks", "--input", s(&rec), "--deterministic"]);
    assert_eq!(peaks.lines().filter(|l| l.starts_with('#')).count(), 10);
    assert!(peaks.lines().filter(|l| !l.starts_with('#')).count() > 10 * 30);

    ok(&["features", "--input", s(&rec), "--length", "64", "--out", s(&ds)]);
    let header = std::fs::read_to_string(&ds).unwrap().lines().next().unwrap().to_string();
    assert!(header.ends_with(",64"), "{header}");

    ok(&["train", "--input", s(&ds), "--rounds", "5", "--out", s(&models)]);
    assert!(models.join("pca.txt").exists() && models.join("ensembles.txt").exists());

    let summary = ok(&["evaluate", "--dataset", s(&ds), "--rounds", "5", "--seed", "2", "--out", s(&eval)]);
    assert_eq!(summary.lines().count(), 3);
    for f in ["report.txt", "report_tables.csv", "bland_altman_dbp.csv", "bland_altman_map.csv", "bland_altman_sbp.csv", "manifest.kv"] {
        assert!(eval.join(f).exists(), "missing {f}");
    }
    let manifest = std::fs::read_to_string(eval.join("manifest.kv")).unwrap();
    assert!(manifest.contains("chacha20+splitmix64"));
    assert!(manifest.contains("config.seed = 2"), "{manifest}");

    let again = ok(&["report", "--from", "bland-altman", "--input", s(&eval), "--subjects", "10"]);
    assert_eq!(again.lines().filter(|l| l.starts_with("bhs ")).count(), 3);
}

#[test]
fn flags_override_config_file_which_overrides_env() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("records");
    ok(&["synth", "--subjects", "1", "--out", s(&rec)]);
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# test\nseed = 17\nfeature_length = 32\n").unwrap();
    let ds = dir.path().join("ds.txt");
    let out = Command::new(env!("CARGO_BIN_EXE_pulsegrid"))
        .args(["--config", s(&cfg), "features", "--input", s(&rec), "--out", s(&ds)])
        .env("PULSEGRID_SEED", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest = std::fs::read_to_string(dir.path().join("manifest.kv")).unwrap();
    assert!(manifest.contains("config.seed = 17"), "{manifest}");
    assert!(manifest.contains("config.feature_length = 32"));

    ok(&["--config", s(&cfg), "features", "--input", s(&rec), "--length", "48", "--out", s(&ds)]);
    let manifest = std::fs::read_to_string(dir.path().join("manifest.kv")).unwrap();
    assert!(manifest.contains("config.feature_length = 48"));

    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let bad = pulsegrid(&["--config", s(&cfg), "features", "--input", s(&rec), "--out", s(&ds)]);
    assert_eq!(bad.status.code(), Some(1));
}

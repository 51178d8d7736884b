use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pesinlab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("PESINLAB_SEED")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn number_after(text: &str, key: &str) -> f64 {
    let rest = &text[text
        .find(key)
        .unwrap_or_else(|| panic!("`{key}` in {text}"))
        + key.len()..];
    rest.split_whitespace()
        .next()
        .unwrap()
        .trim_end_matches(',')
        .parse()
        .unwrap()
}

#[test]
fn cat_lyapunov_exponent() {
    let d = TempDir::new().unwrap();
    let out = ok(d.path(), &["lyapunov", "--map", "cat"]);
    assert!(out.contains("0.962424"), "{out}");
    assert!(d.path().join("lyapunov.csv").exists());
    let doc = json(d.path(), "lyapunov.json");
    assert_eq!(doc["command"], "lyapunov");
    assert_eq!(doc["config"]["map"], "cat");
}

#[test]
fn identity_is_not_chaotic() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["lyapunov", "--map", "identity"]);
    ok(
        d.path(),
        &["ks-entropy", "--map", "identity", "--depth", "6"],
    );
    let out = ok(
        d.path(),
        &["prescription", "--source", "classical", "--map", "identity"],
    );
    assert!(out.trim_end().ends_with("NOT PROVEN CHAOTIC"), "{out}");
}

#[test]
fn baker_entropy_and_prescription() {
    let d = TempDir::new().unwrap();
    let out = ok(d.path(), &["ks-entropy", "--map", "baker", "--depth", "8"]);
    assert!(out.contains("0.693147"), "{out}");
    let out = ok(
        d.path(),
        &["prescription", "--source", "classical", "--map", "baker"],
    );
    assert!(
        out.trim_end()
            .ends_with("CHAOTIC (sufficient condition met)"),
        "{out}"
    );
    let rate = number_after(&out, "rate = ");
    assert!((rate + std::f64::consts::LN_2).abs() < 1e-3, "{rate}");
    for f in [
        "prescription.json",
        "prescription.csv",
        "prescription_words.csv",
        "prescription_decay.gp",
    ] {
        assert!(d.path().join(f).exists(), "{f}");
    }
}

#[test]
fn baker_pesin_identity_holds() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["pesin", "--map", "baker", "--depth", "8"]);
    let doc = json(d.path(), "pesin.json");
    let residual = doc["result"]["report"]["relative_residual"]
        .as_f64()
        .or_else(|| doc["result"]["relative_residual"].as_f64())
        .expect("relative residual in pesin.json");
    assert!(residual.abs() < 1e-6, "{residual}");
}

#[test]
fn gamow_evolve_tracks_the_diagonal() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["gamow-evolve", "--depth", "40", "--seed", "3"]);
    let csv = fs::read_to_string(d.path().join("gamow-evolve.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(
        header.starts_with("n,re_trace,im_trace,diagonal_product,rel_error"),
        "{header}"
    );
    let last: Vec<f64> = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(last[0], 40.0);
    assert!(last[4] < 1e-3, "rel error {}", last[4]);
}

#[test]
fn usage_errors_exit_with_two() {
    let d = TempDir::new().unwrap();
    for args in [
        vec!["lyapunov"],
        vec!["ks-entropy", "--map", "baker", "--grid", "0x3"],
        vec!["ks-entropy", "--map", "tent"],
        vec!["lyapunov", "--map", "cat", "--threads", "0"],
        vec!["prescription", "--source", "gamow", "--map", "cat"],
        vec!["frobnicate"],
    ] {
        let out = run(d.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let cfg = d.path().join("bad.json");
    fs::write(&cfg, r#"{"map": "cat", "stpes": 10}"#).unwrap();
    let out = run(d.path(), &["lyapunov", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stpes"));
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = [
        "prescription",
        "--source",
        "gamow",
        "--depth",
        "30",
        "--truncation",
        "12",
        "--seed",
        "5",
    ];
    ok(a.path(), &args);
    ok(b.path(), &[&args[..], &["--threads", "1"]].concat());
    for f in [
        "prescription.csv",
        "prescription_words.csv",
        "prescription.txt",
    ] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let strip = |v: Value| {
        let mut v = v;
        v["config"]
            .as_object_mut()
            .unwrap()
            .retain(|k, _| k != "threads" && k != "out");
        v
    };
    assert_eq!(
        strip(json(a.path(), "prescription.json")),
        strip(json(b.path(), "prescription.json"))
    );
}

#[test]
fn flags_override_config_and_config_overrides_defaults() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("cfg.json");
    fs::write(&cfg, r#"{"map": "baker", "depth": 5, "seed": 11}"#).unwrap();
    let c = cfg.to_str().unwrap();
    ok(d.path(), &["ks-entropy", "--config", c, "--depth", "4"]);
    let doc = json(d.path(), "ks-entropy.json");
    assert_eq!(doc["config"]["map"], "baker");
    assert_eq!(doc["config"]["depth"], 4);
    assert_eq!(doc["config"]["seed"], 11);
}

#[test]
fn seed_falls_back_to_the_environment() {
    let d = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_pesinlab"))
        .args(["lyapunov", "--map", "cat", "--steps", "200", "--out"])
        .arg(d.path())
        .env("PESINLAB_SEED", "42")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(json(d.path(), "lyapunov.json")["config"]["seed"], 42);

    let out = Command::new(env!("CARGO_BIN_EXE_pesinlab"))
        .args(["lyapunov", "--map", "cat", "--out"])
        .arg(d.path())
        .env("PESINLAB_SEED", "forty-two")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_format_writes_no_csv() {
    let d = TempDir::new().unwrap();
    ok(
        d.path(),
        &[
            "lyapunov", "--map", "baker", "--steps", "200", "--format", "json",
        ],
    );
    assert!(d.path().join("lyapunov.json").exists());
    assert!(!d.path().join("lyapunov.csv").exists());
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn besselcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_besselcalc"))
        .args(args)
        .env_remove("BESSELCALC_THREADS")
        .output()
        .expect("binary runs")
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn envelope(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has the error envelope");
    serde_json::from_str(line).unwrap()
}

#[test]
fn transform_csv_matches_the_gaussian_pair() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hat.csv");
    let out = besselcalc(&["transform", "--r", "1", "--input", "gaussian", "--R", "16", "--N", "2048", "--format", "csv", "-o", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,re,im"));
    let mut checked = 0;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        if cols[0] <= 8.0 {
            assert!((cols[1] - (-0.5 * cols[0] * cols[0]).exp()).abs() < 1e-7, "{line}");
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn norm_growth_reports_the_theory_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ng.json");
    let out = besselcalc(&[
        "norm-growth", "--r", "2", "--p", "1.3333", "--alphas", "1,2,4", "--scheme", "sine", "--R", "512", "--N", "8191",
        "-o", path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json_file(&path);
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["command"], "norm-growth");
    let theory = doc["result"]["theory_exponent"].as_f64().unwrap();
    assert!((theory - 0.75).abs() < 1e-4, "{theory}");
    assert_eq!(doc["result"]["rows"].as_array().unwrap().len(), 3);
    assert_eq!(doc["config"]["plan"]["scheme"], "uniform-node");
}

#[test]
fn cz_emits_pieces_and_constants() {
    let out = besselcalc(&["cz", "--r", "1", "--input", "indicator:0,1", "--lambda", "0.25"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let run = &doc["result"]["decompositions"][0];
    assert_eq!(run["height"], 0.25);
    let pieces = run["pieces"].as_array().unwrap();
    assert!(!pieces.is_empty());
    for p in pieces {
        for key in ["center", "radius", "l1_ratio"] {
            assert!(p[key].is_f64(), "{p}");
        }
    }
    assert!(run["constants"]["good_sup"].as_f64().unwrap() <= 1.0);
    assert!(run["reassembly_defect"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn rerun_reproduces_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    let out = besselcalc(&[
        "weak-type", "--r", "2", "--alphas", "0,1,4", "--scheme", "sine", "--R", "256", "--N", "4095", "--no-timing",
        "-o", first.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = besselcalc(&["rerun", first.to_str().unwrap(), "-o", second.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());

    // a bare config file works too
    let bare = dir.path().join("config.json");
    std::fs::write(&bare, json_file(&first)["config"].to_string()).unwrap();
    let out = besselcalc(&["rerun", bare.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(out.stdout, std::fs::read(&first).unwrap());
}

#[test]
fn selftest_is_deterministic() {
    let a = besselcalc(&["selftest", "--seed", "7", "--no-timing"]);
    let b = besselcalc(&["selftest", "--seed", "7", "--no-timing"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stderr).contains("PASS"));
}

#[test]
fn validation_errors_exit_with_2() {
    for (args, field) in [
        (vec!["transform", "--r", "-1"], "r"),
        (vec!["transform", "--N", "2050"], "N"),
        (vec!["transform", "--N", "65536"], "N"),
        (vec!["transform", "--scheme", "sine", "--r", "1"], "scheme"),
        (vec!["heat", "--t", "0"], "t"),
        (vec!["transform", "--input", "gauss"], "input"),
        (vec!["multiplier", "--symbol", "warp:1"], "symbol"),
        (vec!["norm-growth", "--p", "1"], "p"),
        (vec!["norm-growth", "--p", "1.5", "--alphas", "4,2"], "alphas"),
        (vec!["cz", "--lambda", "-1"], "lambda"),
        (vec!["transform", "-o", "/nonexistent/dir/out.json"], "output"),
    ] {
        let out = besselcalc(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let env = envelope(&out);
        assert_eq!(env["schema"], 1);
        assert_eq!(env["error"]["field"], field, "{args:?}: {env}");
        assert!(out.stdout.is_empty());
    }
    // argument syntax errors come from the parser
    assert_eq!(besselcalc(&["transform", "--bogus"]).status.code(), Some(2));
}

#[test]
fn numerical_errors_exit_with_3() {
    let out = besselcalc(&["kernel-tail", "--r", "1", "--center", "14", "--interval-radius", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(envelope(&out)["error"]["code"], "domain");
}

#[test]
fn config_files_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"config": {"command": "heat", "bogus": 1}}"#).unwrap();
    let out = besselcalc(&["rerun", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(envelope(&out)["error"]["field"], "config");
}

#[test]
fn outputs_are_written_whole() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("heat.json");
    std::fs::write(&path, "stale").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_besselcalc"))
        .args(["heat", "--t", "0.5", "-o", path.to_str().unwrap()])
        .env("BESSELCALC_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json_file(&path);
    let before = doc["result"]["mass_before"].as_f64().unwrap();
    let after = doc["result"]["mass_after"].as_f64().unwrap();
    assert!((before - after).abs() < 1e-6 * before);
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 1, "temporary files left behind");
}

#[test]
fn function_commands_run() {
    for args in [
        vec!["inverse", "--r", "2"],
        vec!["multiplier", "--symbol", "heat:0.1*mollifier:0.5"],
        vec!["imaginary-power", "--alpha", "2"],
        vec!["translate", "--y", "0.5", "--N", "512"],
        vec!["convolve", "--kernel", "bump:1,0.5", "--N", "256"],
        vec!["mollifier", "--xi-max", "64"],
        vec!["kernel-tail", "--r", "1", "--alpha", "1", "--center", "2", "--interval-radius", "0.5"],
    ] {
        let out = besselcalc(&args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(doc["command"], args[0]);
    }
}

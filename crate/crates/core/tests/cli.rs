mod common;

use std::process::Command;

use common::*;
use perturbed_occupation::cli::run;
use perturbed_occupation::report::Report;
use serde_json::Value;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["perturbed-occupation"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(name: &str) -> String {
    fixture(name).display().to_string()
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let (code, out, err) = call(&full);
    assert_eq!(code, 0, "{args:?}: {err}");
    serde_json::from_str(&out).unwrap()
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect()
}

#[test]
fn every_chain_fixture_analyzes() {
    let dir = fixture("");
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap().to_str().unwrap().to_string();
        if name.starts_with("g_") || name.starts_with("game_") {
            continue;
        }
        let (code, out, err) = call(&["analyze", p.to_str().unwrap()]);
        assert_eq!(code, 0, "{name}: {err}");
        assert!(out.contains("classes"), "{name}: {out}");
    }
}

#[test]
fn analyze_writes_a_report_that_matches_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("ill.report.json");
    let (code, _, err) = call(&["analyze", &path("ill.json"), "--out", report_path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&report_path).unwrap();
    let report = Report::from_json(&text).unwrap();
    let model = perturbed_occupation::hierarchy::analyze(&load("ill.json")).unwrap();
    assert!(report.matches(&model));

    let v: Value = serde_json::from_str(&text).unwrap();
    let alphas: Vec<&str> = v["alphas"].as_array().unwrap().iter().map(|a| a.as_str().unwrap()).collect();
    assert_eq!(alphas, ["0", "1/5", "2/5", "3/5", "1"]);
    assert_eq!(v["N"], 2);
    assert_eq!(v["classes"], serde_json::json!([["1", "2", "3"], ["4"], ["7", "8"]]));
}

#[test]
fn output_is_deterministic() {
    let ill = path("ill.json");
    for args in [
        ["--json", "analyze", &ill].as_slice(),
        &["position", "--t", "0.5", &ill],
        &["--json", "occupation", "--total", &ill],
    ] {
        let first = call(args);
        let second = call(args);
        assert_eq!(first, second);
        assert_eq!(first.0, 0);
    }
}

#[test]
fn position_by_time_and_fraction_agree() {
    let f = 1.0 - (-1.0f64).exp();
    let by_t = json(&["position", &path("ex2_a1.json"), "--t", "1"]);
    let by_f = json(&["position", &path("ex2_a1.json"), "--fraction", &f.to_string()]);
    let a = matrix(&by_t["position"]);
    let b = matrix(&by_f["position"]);
    for (ra, rb) in a.iter().zip(&b) {
        for (x, y) in ra.iter().zip(rb) {
            assert!((x - y).abs() < 1e-12);
        }
    }
    assert!((a[0][0] - (1.0 + (-2.0f64).exp()) / 2.0).abs() < 1e-12);

    let one = json(&["position", &path("ex2_a1.json"), "--t", "1", "--from", "2"]);
    assert_eq!(matrix(&one["position"]), vec![a[1].clone()]);
    assert_eq!(one["from"], serde_json::json!(["2"]));
}

#[test]
fn occupation_and_payoff() {
    let total = json(&["occupation", &path("ex2_a1.json"), "--total"]);
    let m = matrix(&total["occupation"]);
    assert!((m[0][0] - 2.0 / 3.0).abs() < 1e-12 && (m[1][0] - 1.0 / 3.0).abs() < 1e-12);
    let finite = json(&["occupation", &path("ex2_a1.json"), "--t", "2"]);
    let m = matrix(&finite["occupation"]);
    assert!((m[0].iter().sum::<f64>() - (1.0 - (-2.0f64).exp())).abs() < 1e-12);

    let pay = json(&["payoff", &path("ex2_a1.json"), "--g", &path("g_ex2.json")]);
    assert!((pay["by_state"]["1"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    let pay = json(&["payoff", &path("ill.json"), "--g", &path("g_ill_delta4.json")]);
    assert_eq!(pay["payoff"].as_array().unwrap().len(), 8);
}

#[test]
fn verify_reports_a_sweep() {
    let v = json(&["verify", &path("ill.json"), "--t", "1", "--lambdas", "1e-3,1e-6"]);
    let points = v.as_array().unwrap();
    assert_eq!(points.len(), 2);
    let e0 = points[0]["position_err"].as_f64().unwrap();
    let e1 = points[1]["position_err"].as_f64().unwrap();
    assert!(e1 < e0);
    let (code, out, _) = call(&["verify", &path("ill.json"), "--t", "1", "--lambdas", "1e-3,1e-6"]);
    assert_eq!(code, 0);
    assert!(out.contains("non-increasing"));
}

#[test]
fn game_compile_writes_a_loadable_chain() {
    let dir = tempfile::tempdir().unwrap();
    let chain_path = dir.path().join("chain.json");
    let g_path = dir.path().join("g.json");
    let (code, out, err) = call(&[
        "game-compile",
        &path("game_switch.json"),
        "--out",
        chain_path.to_str().unwrap(),
        "--payoff-out",
        g_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("2 states"));
    let pay = json(&["payoff", chain_path.to_str().unwrap(), "--g", g_path.to_str().unwrap()]);
    let p: Vec<f64> = pay["payoff"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((p[0] - 2.0 / 3.0).abs() < 1e-12 && (p[1] - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"states": ["a", "b"], "transitions": [{"from": "a", "to": "c", "coeff": 1, "exp": "1"}]}"#).unwrap();
    let (code, _, err) = call(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("transitions[0]"), "{err}");

    std::fs::write(&bad, "{ not json").unwrap();
    let (code, _, err) = call(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 1"), "{err}");

    let missing = dir.path().join("missing.json");
    assert_eq!(call(&["analyze", missing.to_str().unwrap()]).0, 1);
    assert_eq!(call(&["position", &path("ill.json")]).0, 1);
    assert_eq!(call(&["position", &path("ill.json"), "--fraction", "1.5"]).0, 1);
    assert_eq!(call(&["position", &path("ill.json"), "--t", "1", "--from", "9"]).0, 1);
    assert_eq!(call(&["verify", &path("ill.json"), "--t", "1", "--lambdas", "1e-6,1e-3"]).0, 1);
    assert_eq!(call(&["frobnicate"]).0, 1);
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, 0);
    for sub in ["analyze", "position", "occupation", "payoff", "verify", "game-compile"] {
        assert!(out.contains(sub), "help lacks {sub}");
    }
}

#[test]
fn binary_runs_end_to_end() {
    let exe = env!("CARGO_BIN_EXE_perturbed-occupation");
    let output = Command::new(exe).args(["--json", "occupation", "--total", &path("ex2_a1_2.json")]).output().unwrap();
    assert!(output.status.success());
    let v: Value = serde_json::from_slice(&output.stdout).unwrap();
    let m = matrix(&v["occupation"]);
    assert!(m.iter().flatten().all(|&x| (x - 0.5).abs() < 1e-12));
    let failed = Command::new(exe).args(["analyze", "/nonexistent.json"]).output().unwrap();
    assert_eq!(failed.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&failed.stderr).starts_with("error:"));
}

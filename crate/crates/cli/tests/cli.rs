use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use corrpref::premia::persistence_premium_approx;
use corrpref::risk::{KpModel, RiskAdjustment};

const HS: &str = "family = \"exponential\"\ntheta = 1.0\nbeta = 0.9\n";
const EZ: &str = "family = \"ez_power\"\nalpha = -1.0\nrho = 0.5\nbeta = 0.9\nfelicity = \"power\"\n";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrpref")).args(args).output().expect("binary runs")
}

fn run_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrpref")).args(args).env(key, val).output().expect("binary runs")
}

fn file(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn reproduce_table1_rows() {
    let o = run(&["reproduce", "table1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!((rows[1]["premium"].as_f64().unwrap() - 0.302).abs() < 1e-3);
    assert!((rows[2]["premium"].as_f64().unwrap() - 0.393).abs() < 1e-3);
    assert_eq!(rows[2]["risk_aversion"].as_f64(), Some(10.0));
    assert!(stderr(&o).contains("table1: PASS"));
}

#[test]
fn reproduce_tax_passes_and_red_target_exits_one() {
    let o = run(&["reproduce", "tax"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["reproduce", "hara"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("MISS dpos hara"));
    assert_eq!(json(&o)["target"], "hara");
}

#[test]
fn reproduce_unknown_target_is_usage() {
    let o = run(&["reproduce", "table9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("usage"));
}

#[test]
fn ragged_lottery_is_computation_error() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "m.cfg", HS);
    let l = file(
        &dir,
        "bad.json",
        r#"{"c":1,"next":[{"p":0.5,"node":{"c":1}},{"p":0.5,"node":{"c":1,"next":[{"p":1,"node":{"c":2}}]}}]}"#,
    );
    let o = run(&["eval", "--model", s(&m), "--lottery", s(&l)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("RaggedHorizon"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn eval_deterministic_stream() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "m.cfg", EZ);
    let l = file(&dir, "d.json", r#"{"c":1,"next":[{"p":1,"node":{"c":4,"next":[{"p":1,"node":{"c":9}}]}}]}"#);
    let o = run(&["eval", "--model", s(&m), "--lottery", s(&l)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    // u(c) = 2√c
    let expected = 2.0 + 0.9 * 4.0 + 0.81 * 6.0;
    assert!((v["value"].as_f64().unwrap() - expected).abs() < 1e-8);
    assert_eq!(v["horizon"], 2);
}

#[test]
fn premium_matches_library() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "hs.cfg", HS);
    let o = run(&["premium", "persistence", "--model", s(&m), "--x", "2", "--y", "1", "--eps", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let model = KpModel::linear(RiskAdjustment::exponential(1.0).unwrap(), 0.9).unwrap();
    let lib = persistence_premium_approx(&model, 1.0, 2.0, 1.0, 1.0).unwrap();
    let cli = v["exact_pi"].as_f64().unwrap();
    assert!((cli - lib.exact_pi).abs() <= 1e-8 * lib.exact_pi.abs().max(1e-12), "{cli} vs {}", lib.exact_pi);
    assert!(lib.exact_pi > 0.0);
}

#[test]
fn premium_sweep_writes_csv() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "hs.cfg", HS);
    let csv = dir.path().join("sweep.csv");
    let o = run(&["premium", "timing", "--model", s(&m), "--x", "2", "--y", "1", "--k", "1", "--sweep", "5", "--csv", s(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&o).as_array().unwrap().len(), 5);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("epsilon,exact_pi,approx_pi,gap"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn timing_without_k_is_usage() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "hs.cfg", HS);
    let o = run(&["premium", "timing", "--model", s(&m), "--x", "2", "--y", "1", "--eps", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_errors_are_usage() {
    let dir = TempDir::new().unwrap();
    let l = file(&dir, "d.json", r#"{"c":1}"#);
    for body in [
        "family = \"exponential\"\ntheta = 1.0\nbeta = 0.9\ncolour = 3\n",
        "family = \"exponential\"\ntheta = 1.0\nalpha = -1.0\nbeta = 0.9\n",
        "family = \"exponential\"\nbeta = 0.9\n",
        "family = \"exponential\"\ntheta = -1.0\nbeta = 0.9\n",
    ] {
        let m = file(&dir, "m.cfg", body);
        let o = run(&["eval", "--model", s(&m), "--lottery", s(&l)]);
        assert_eq!(o.status.code(), Some(2), "{body}: {}", stderr(&o));
    }
    let o = run(&["eval", "--model", "/nonexistent/m.cfg", "--lottery", s(&l)]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_directory_is_checked_first() {
    let o = run(&["reproduce", "table1", "--out", "/nonexistent/dir/out.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_reports_witness() {
    let dir = TempDir::new().unwrap();
    let a = file(
        &dir,
        "a.json",
        r#"{"c":1,"next":[{"p":0.5,"node":{"c":5,"next":[{"p":1,"node":{"c":10}}]}},{"p":0.5,"node":{"c":5,"next":[{"p":1,"node":{"c":0}}]}}]}"#,
    );
    let b = file(&dir, "b.json", r#"{"c":1,"next":[{"p":1,"node":{"c":5,"next":[{"p":0.5,"node":{"c":10}},{"p":0.5,"node":{"c":0}}]}}]}"#);
    let o = run(&["compare", s(&a), s(&b)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["result"], "more_informative");
    let w: Vec<Vec<f64>> = serde_json::from_value(v["witness"].clone()).unwrap();
    assert_eq!(w, vec![vec![0.5, 0.5]]);
    let o = run(&["compare", s(&b), s(&a)]);
    assert_eq!(json(&o)["result"], "less");
}

#[test]
fn tax_curve_csv() {
    let dir = TempDir::new().unwrap();
    let p = file(&dir, "tax.cfg", "ability_persistence = 0.0\n");
    let curve = dir.path().join("curve.csv");
    let o = run(&["tax", "optimize", "--params", s(&p), "--curve", s(&curve)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!((json(&o)["tau_star"].as_f64().unwrap() - 0.4525).abs() < 5e-3);
    let text = fs::read_to_string(&curve).unwrap();
    assert!(text.starts_with("tau,welfare\n"));
    let bad = file(&dir, "bad.cfg", "progressivity = 0.3\n");
    assert_eq!(run(&["tax", "optimize", "--params", s(&bad)]).status.code(), Some(2));
}

#[test]
fn calibrate_lrr_matches() {
    let o = run(&["calibrate", "lrr", "--match-vol"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert!((v["row"]["premium"].as_f64().unwrap() - 0.302).abs() < 1e-3);
    assert!((v["matched_volatility"]["sigma_iid"].as_f64().unwrap() - 0.0079719).abs() < 1e-6);
    assert!(v.get("matched_dpos").is_none());
}

#[test]
fn variational_check_small_gap() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "m.cfg", "family = \"exponential\"\ntheta = 1.0\nbeta = 0.9\nfelicity = \"log\"\n");
    let l = file(
        &dir,
        "d.json",
        r#"{"c":1,"next":[{"p":0.3,"node":{"c":2,"next":[{"p":0.5,"node":{"c":1}},{"p":0.5,"node":{"c":4}}]}},{"p":0.7,"node":{"c":3,"next":[{"p":1,"node":{"c":2}}]}}]}"#,
    );
    let o = run(&["variational", "check", "--model", s(&m), "--lottery", s(&l)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert!(v["gap"].as_f64().unwrap() <= 1e-7);
    assert_eq!(v["nodes"].as_array().unwrap().len(), 3);
}

#[test]
fn horizon_prefers_iid() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "m.cfg", "family = \"exponential\"\ntheta = 2.0\nbeta = 0.9\n");
    let d = file(&dir, "ell.json", r#"{"c0": 1.0, "points": [[1.0, 0.5], [4.0, 0.5]]}"#);
    let o = run(&["horizon", "compare", "--model", s(&m), "--dist", s(&d), "--rho", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["iid_weakly_preferred"], true);
    assert!(v["iid"].as_f64().unwrap() > v["corr"].as_f64().unwrap());
}

#[test]
fn suite_output_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "m.cfg", EZ);
    let args = ["suite", "theorem1", "--model", s(&m), "--n", "40", "--seed", "7"];
    let a = run(&args);
    let b = run_env(&args, "CORRPREF_THREADS", "1");
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["cases_run"], 40);
    assert!(v["violations"].as_array().unwrap().is_empty());
}

#[test]
fn converse_and_prop1_suites() {
    let dir = TempDir::new().unwrap();
    let drra = file(&dir, "h.cfg", "family = \"hara\"\ngamma = -0.5\nb = -0.4\nbeta = 1.0\n");
    let o = run(&["suite", "theorem1", "--model", s(&drra), "--converse"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(!json(&o)["violations"].as_array().unwrap().is_empty());
    let hs = file(&dir, "hs.cfg", HS);
    let o = run(&["suite", "theorem1", "--model", s(&hs), "--converse"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("NoWitness"));
    let o = run(&["suite", "prop1", "--model", s(&hs), "--n", "30"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(json(&o)["violations"].as_array().unwrap().is_empty());
}

#[test]
fn measures() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "m.cfg", EZ);
    let o = run(&["measure", "er", "--model", s(&m), "--x", "2", "--y", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let er = json(&o)["er"].as_f64().unwrap();
    // y(1 − α/ρ)/(x(βx + y))
    assert!((er - 3.0 / (2.0 * 2.8)).abs() < 1e-8);
    let o = run(&["measure", "classify", "--model", s(&m)]);
    let v = json(&o);
    assert_eq!(v["irra"], true);
    assert_eq!(v["dara"], true);
}

#[test]
fn bad_thread_count_is_usage() {
    let o = run_env(&["reproduce", "table1"], "CORRPREF_THREADS", "zero");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_flag_writes_file() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let o = run(&["reproduce", "vol_match", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["target"], "vol_match");
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn quatcal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quatcal")).current_dir(dir).args(args).output().expect("binary runs")
}

fn body(out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stdout).expect("report is JSON");
    v["body"].clone()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn verify_all_exact_has_zero_residuals() {
    let dir = TempDir::new().unwrap();
    let out = quatcal(dir.path(), &["verify-all", "--n", "1", "--arith", "exact"]);
    assert_eq!(out.status.code(), Some(0));
    let b = body(&out);
    assert_eq!(b["status"], "ok");
    for (suite, r) in b["residuals"].as_object().unwrap() {
        assert_eq!(r.as_f64(), Some(0.0), "{suite}");
    }
    let lambda = &b["results"]["suites"][1]["data"]["lambda"]["value"];
    assert_eq!(lambda, &serde_json::json!(["2", "1"]));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = quatcal(dir.path(), &["decompose", "--n", "1", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert!(out.stdout.is_empty());
}

#[test]
fn exact_mode_is_refused_for_float_operations() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "w.json", r#"{"version":1,"n":1,"structure":[1,0,0],"generators":[[1,0,0,0]]}"#);
    let out = quatcal(dir.path(), &["psi-scan", "--n", "1", "--i", "0", "--subspace", "w.json", "--arith", "exact"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_input_exits_one() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "w.json", r#"{"version":1,"n":1,"structure":[1,0],"generators":[]}"#);
    let out = quatcal(dir.path(), &["psi-scan", "--n", "1", "--i", "0", "--subspace", "w.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("structure"));
}

#[test]
fn decompose_rows() {
    let dir = TempDir::new().unwrap();
    let out = quatcal(dir.path(), &["decompose", "--n", "1", "--k", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(body(&out)["results"]["rows"], serde_json::json!([[2, 0, 3, 3], [2, 2, 1, 3]]));
}

#[test]
fn torus_scan_random_seed_7_has_no_non_quaternionic_subtori() {
    let dir = TempDir::new().unwrap();
    let out = quatcal(dir.path(), &["torus-scan", "--n", "1", "--i", "0", "--L", "random", "--seed", "7", "--height", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let b = body(&out);
    assert_eq!(b["results"]["non_quaternionic"], 0);
    assert_eq!(b["results"]["truncated"], false);
}

#[test]
fn reports_are_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let args = ["comass", "--form", "f.json", "--restarts", "6", "--seed", "3", "--frames", "2000"];
    let made = quatcal(dir.path(), &["calibration", "--n", "1", "--i", "0", "--L", "0.6,0,0.8", "--out", "f.json"]);
    assert_eq!(made.status.code(), Some(0));
    let one = Command::new(env!("CARGO_BIN_EXE_quatcal")).current_dir(dir.path()).env("QUATCAL_THREADS", "1").args(args).output().unwrap();
    let many = quatcal(dir.path(), &args);
    assert_eq!(body(&one), body(&many));
    let timings: Value = serde_json::from_slice(&one.stdout).unwrap();
    assert_eq!(timings["timings"]["threads"], 1);
}

#[test]
fn calibration_then_comass_reaches_one() {
    let dir = TempDir::new().unwrap();
    let cal = quatcal(dir.path(), &["calibration", "--n", "1", "--i", "0", "--L", "1,0,0", "--out", "form.json", "--report", "cal.json"]);
    assert_eq!(cal.status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("cal.json")).unwrap()).unwrap();
    assert!(report["body"]["residuals"]["coisotropic_max_minus_one"].as_f64().unwrap() < 1e-12);
    assert_eq!(report["body"]["results"]["form"]["path"], "form.json");

    let out = quatcal(dir.path(), &["comass", "--form", "form.json", "--restarts", "20", "--seed", "1", "--tol", "1e-10"]);
    assert_eq!(out.status.code(), Some(0));
    let b = body(&out);
    assert!(b["results"]["lower_bound"].as_f64().unwrap() >= 1.0 - 1e-6);
    assert!(b["results"]["max_on_random_frames"].as_f64().unwrap() <= 1.0 + 1e-9);
    assert_eq!(b["seed"], 1);
}

#[test]
fn exact_calibration_form_is_readable() {
    let dir = TempDir::new().unwrap();
    let cal = quatcal(dir.path(), &["calibration", "--n", "1", "--i", "1", "--L", "3/5,0,-4/5", "--arith", "exact", "--out", "e.json"]);
    assert_eq!(cal.status.code(), Some(0), "{}", String::from_utf8_lossy(&cal.stderr));
    let form: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("e.json")).unwrap()).unwrap();
    assert_eq!(form["exact"], true);
    assert_eq!(form["degree"], 4);
    let bad = quatcal(dir.path(), &["calibration", "--n", "1", "--i", "0", "--L", "0.6,0,0.8", "--arith", "exact", "--out", "x.json"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn psi_scan_quaternionic_line_vanishes() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "w.json",
        r#"{"version":1,"n":2,"structure":[1,0,0],"generators":[[1,0,0,0,0,0,0,0],[0,0,1,0,0,0,0,0]]}"#,
    );
    let out = quatcal(dir.path(), &["psi-scan", "--n", "2", "--i", "0", "--subspace", "w.json", "--grid", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    let b = body(&out);
    assert_eq!(b["results"]["k"], 1);
    assert_eq!(b["results"]["classification"], "identically_zero");
    assert!(b["residuals"]["max_abs_over_bound"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn phi_fit_of_a_coordinate_class() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "z.json", r#"{"version":1,"n":1,"basis":[[1,0,0,0],[0,1,0,0]]}"#);
    let out = quatcal(dir.path(), &["phi-fit", "--n", "1", "--i", "0", "--class", "z.json"]);
    assert_eq!(out.status.code(), Some(0));
    let b = body(&out);
    assert!(b["residuals"]["fit"].as_f64().unwrap() <= 1e-9);
    assert_eq!(b["results"]["polynomial"]["degree"], 1);
    assert_eq!(b["results"]["extrema"]["extrema"].as_array().unwrap().len(), 2);
}

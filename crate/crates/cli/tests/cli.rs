use semidyn_core::systems::System;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn semidyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semidyn")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn fixtures_round_trip() {
    for entry in std::fs::read_dir(fixture("")).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let sys = System::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = System::from_json(&sys.to_json()).unwrap();
        assert_eq!(sys.to_json(), again.to_json(), "{}", path.display());
    }
}

#[test]
fn k3_origin_has_zero_height_and_seven_point_orbit() {
    let sys = fixture("k3_cube.json");
    let sys = sys.to_str().unwrap();
    let h = json(&semidyn(&["height", "--system", sys, "--point", "(0,0,0)"]));
    assert_eq!(h["estimate"]["value"], 0.0);
    assert_eq!(h["estimate"]["error_radius"], 0.0);
    assert_eq!(h["estimate"]["certified"], true);
    let o = json(&semidyn(&["orbit", "--system", sys, "--point", "(0,0,0)"]));
    assert_eq!(o["nodes"].as_array().unwrap().len(), 7);
    assert_eq!(o["edges"].as_array().unwrap().len(), 21);
}

#[test]
fn output_is_deterministic() {
    let sys = fixture("square_pair.json");
    let args = ["height", "--system", sys.to_str().unwrap(), "--point", "(3:2)", "--target-error", "1e-9"];
    let a = semidyn(&args);
    let b = semidyn(&["--threads", "1"].iter().chain(args.iter()).copied().collect::<Vec<_>>());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exit_codes() {
    let square = fixture("square.json");
    let square = square.to_str().unwrap();
    let code = |args: &[&str]| semidyn(args).status.code().unwrap();
    assert_eq!(code(&["height", "--system", square, "--point", "(2:1)"]), 0);
    assert_eq!(code(&["height", "--system", "does-not-exist.json", "--point", "(2:1)"]), 1);
    assert_eq!(code(&["height", "--system", square, "--point", "(1:0:2)"]), 1);
    assert_eq!(code(&["height", "--system", square, "--point", "(0:0)"]), 1);
    assert_eq!(code(&["height", "--system", square]), 1);
    let henon = fixture("henon.json");
    assert_eq!(code(&["height", "--system", henon.to_str().unwrap(), "--point", "(1:2:1)"]), 2);
    let exceptional = ["equi", "--system", square, "--base", "0", "--exceptional", "0;inf", "--target", "circle"];
    assert_eq!(code(&exceptional), 2);
}

#[test]
fn square_height_and_decomposition() {
    let square = fixture("square.json");
    let square = square.to_str().unwrap();
    let h = json(&semidyn(&["height", "--system", square, "--point", "(2:1)"]));
    assert_eq!(h["estimate"]["value"].as_f64().unwrap(), 2f64.ln());
    let d = json(&semidyn(&["decompose", "--system", square, "--point", "(2:1)"]));
    let total = d["decomposition"]["total"].as_f64().or_else(|| d["total"].as_f64()).unwrap();
    assert!((total - 2f64.ln()).abs() < 1e-12, "{d}");
}

#[test]
fn claim_with_exact_lambda() {
    let c = json(&semidyn(&["claim", "--lambda-default", "--n-max", "40"]));
    assert_eq!(c["lambda_exact"], "7+4*sqrt(3)");
    let rows = c["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 41);
    let residuals: Vec<f64> = rows.iter().skip(1).map(|r| r["residual"].as_f64().unwrap()).collect();
    assert!(residuals.windows(2).all(|w| w[1] < w[0]));
    assert!(*residuals.last().unwrap() < 1e-20);
}

#[test]
fn measure_writes_csv_and_scripts() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("measure_out");
    std::fs::create_dir_all(&dir).unwrap();
    let prefix = dir.join("square");
    let sys = fixture("square.json");
    let m = json(&semidyn(&[
        "measure",
        "--system",
        sys.to_str().unwrap(),
        "--resolution",
        "128",
        "--iterations",
        "20",
        "--out",
        prefix.to_str().unwrap(),
    ]));
    assert_eq!(m["command"], "measure");
    for suffix in ["_potential.csv", "_potential.gp", "_measure.csv", "_measure.gp"] {
        let path = dir.join(format!("square{suffix}"));
        assert!(std::fs::metadata(&path).map(|m| m.len() > 0).unwrap_or(false), "{}", path.display());
    }
}

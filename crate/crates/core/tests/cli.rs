use std::process::Command;

use serde_json::Value;

use sard_cauchy::cli::{run, EXIT_COLLISION, EXIT_INVALID, EXIT_OK, EXIT_VERIFY};
use sard_cauchy::grid_rhs::{g0, Singularity};

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn cli(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("sard-cauchy").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn json(r: &Run) -> Value {
    serde_json::from_str(&r.out).unwrap_or_else(|e| panic!("bad json ({e}): {}", r.out))
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

#[test]
fn coeffs_json_envelope() {
    let r = cli(&["coeffs", "--n", "8", "--t", "1/pi"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let v = json(&r);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "coeffs");
    let c = floats(&v["payload"]["coefficients"]);
    assert_eq!(c.len(), 9);
    let t = Singularity::new(std::f64::consts::FRAC_1_PI).unwrap();
    assert!((c.iter().sum::<f64>() - g0(t)).abs() < 1e-12);
    let diags = v["diagnostics"].as_array().unwrap();
    assert_eq!(diags.len(), 2);
    assert!(diags.iter().all(|d| d["pass"] == true));
}

#[test]
fn coeffs_rejects_bad_inputs() {
    assert_eq!(
        cli(&["coeffs", "--n", "1", "--t", "0.3"]).code,
        EXIT_INVALID
    );
    assert_eq!(
        cli(&["coeffs", "--n", "8", "--t", "1.2"]).code,
        EXIT_INVALID
    );
    assert_eq!(
        cli(&["coeffs", "--n", "8", "--t", "nan"]).code,
        EXIT_INVALID
    );
    assert_eq!(cli(&["coeffs", "--n", "8"]).code, EXIT_INVALID);
    assert_eq!(cli(&["bogus"]).code, EXIT_INVALID);
    let r = cli(&["coeffs", "--n", "4", "--t", "0.25"]);
    assert_eq!(r.code, EXIT_COLLISION);
    assert!(r.out.is_empty());
    assert!(r.err.contains("error"));
}

#[test]
fn help_and_version_exit_cleanly() {
    let r = cli(&["--help"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.out.contains("coeffs"));
    assert_eq!(cli(&["--version"]).code, EXIT_OK);
}

#[test]
fn csv_matches_json_numbers() {
    let j = json(&cli(&["coeffs", "--n", "16", "--t", "0.3"]));
    let r = cli(&["coeffs", "--n", "16", "--t", "0.3", "--format", "csv"]);
    assert_eq!(r.code, EXIT_OK);
    let mut lines = r.out.lines();
    assert_eq!(lines.next(), Some("beta,node,coefficient"));
    let from_csv: Vec<f64> = lines
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(from_csv, floats(&j["payload"]["coefficients"]));
    // multipliers and diagnostics go to the side stream
    assert!(r.err.contains("# p1="));
    assert!(r.err.contains("moment_sum_equals_g0,true"));
}

#[test]
fn output_is_deterministic() {
    for args in [
        &["coeffs", "--n", "32", "--t", "sqrt2/2"][..],
        &["verify", "--n", "4,8", "--t", "0.3,1/e"][..],
    ] {
        let a = cli(args);
        let b = cli(args);
        assert_eq!(a.out, b.out);
        assert_eq!(a.err, b.err);
    }
}

#[test]
fn verify_default_passes() {
    let r = cli(&["verify"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.out);
    let v = json(&r);
    assert_eq!(v["payload"]["pass"], true);
    assert_eq!(v["payload"]["cells"].as_array().unwrap().len(), 18);
}

#[test]
fn verify_fails_at_impossible_tolerance() {
    let r = cli(&["verify", "--n", "16,32", "--t", "1/pi", "--tol", "1e-15"]);
    assert_eq!(r.code, EXIT_VERIFY);
    let v = json(&r);
    assert_eq!(v["payload"]["pass"], false);
}

#[test]
fn verify_skips_collisions() {
    let r = cli(&["verify", "--n", "4,8", "--t", "0.25"]);
    assert_eq!(r.code, EXIT_OK);
    let cells = json(&r)["payload"]["cells"].as_array().unwrap().clone();
    assert!(cells
        .iter()
        .all(|c| c["status"].as_str().unwrap().starts_with("skipped")));
    assert_eq!(cli(&["verify", "--n", "1"]).code, EXIT_INVALID);
    assert_eq!(cli(&["verify", "--tol", "-1"]).code, EXIT_INVALID);
}

#[test]
fn integrate_catalog_functions() {
    let v = json(&cli(&[
        "integrate",
        "--func",
        "one",
        "--n",
        "8",
        "--t",
        "0.3",
    ]));
    let p = &v["payload"];
    assert!(p["abs_error"].as_f64().unwrap() < 1e-12);
    let v = json(&cli(&[
        "integrate",
        "--func",
        "x2",
        "--n",
        "64",
        "--t",
        "0.3",
    ]));
    assert!(v["payload"]["abs_error"].as_f64().unwrap() < 1e-4);
    assert_eq!(
        cli(&["integrate", "--func", "nope", "--n", "8", "--t", "0.3"]).code,
        EXIT_INVALID
    );
    assert_eq!(
        cli(&["integrate", "--n", "8", "--t", "0.3"]).code,
        EXIT_INVALID
    );
}

#[test]
fn integrate_samples_file() {
    let dir = std::env::temp_dir().join(format!("sard-cauchy-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("good.txt");
    std::fs::write(&good, "# constant one\n1 1 1\n1,1\n").unwrap();
    let r = cli(&[
        "integrate",
        "--samples",
        good.to_str().unwrap(),
        "--n",
        "4",
        "--t",
        "0.3",
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let approx = json(&r)["payload"]["approximation"].as_f64().unwrap();
    assert!((approx - g0(Singularity::new(0.3).unwrap())).abs() < 1e-12);
    let short = dir.join("short.txt");
    std::fs::write(&short, "1 2 3").unwrap();
    let r = cli(&[
        "integrate",
        "--samples",
        short.to_str().unwrap(),
        "--n",
        "4",
        "--t",
        "0.3",
    ]);
    assert_eq!(r.code, EXIT_INVALID);
    let missing = dir.join("missing.txt");
    let r = cli(&[
        "integrate",
        "--samples",
        missing.to_str().unwrap(),
        "--n",
        "4",
        "--t",
        "0.3",
    ]);
    assert_eq!(r.code, EXIT_INVALID);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn convergence_ladders() {
    let v = json(&cli(&["convergence", "--func", "x2", "--t", "1/pi"]));
    assert_eq!(v["payload"]["rows"].as_array().unwrap().len(), 4);
    let orders = floats(&v["payload"]["orders"]);
    assert_eq!(orders.len(), 3);
    assert!(orders.iter().all(|&p| p > 2.5));
    let v = json(&cli(&[
        "convergence",
        "--func",
        "x3",
        "--t",
        "0.3",
        "--doublings",
        "0",
    ]));
    assert_eq!(v["payload"]["rows"].as_array().unwrap().len(), 1);
    assert!(v["payload"]["orders"].as_array().unwrap().is_empty());
    let r = cli(&[
        "convergence",
        "--func",
        "x2",
        "--t",
        "0.3",
        "--n-start",
        "1",
    ]);
    assert_eq!(r.code, EXIT_INVALID);
}

#[test]
fn convergence_marks_collisions() {
    let v = json(&cli(&[
        "convergence",
        "--func",
        "x2",
        "--t",
        "0.5",
        "--n-start",
        "3",
        "--doublings",
        "2",
    ]));
    let rows = v["payload"]["rows"].as_array().unwrap();
    assert!(rows[0]["note"].is_null());
    assert!(rows[1]["note"].as_str().unwrap().starts_with("skipped"));
}

#[test]
fn operator_check_windows() {
    let r = cli(&["operator-check"]);
    assert_eq!(r.code, EXIT_OK);
    let v = json(&r);
    assert_eq!(v["diagnostics"].as_array().unwrap().len(), 15);
    // truncation at a short window is far above the threshold
    assert_eq!(cli(&["operator-check", "--window", "12"]).code, EXIT_VERIFY);
    assert_eq!(cli(&["operator-check", "--window", "5"]).code, EXIT_INVALID);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_sard-cauchy");
    let ok = Command::new(bin)
        .args(["coeffs", "--n", "2", "--t", "0.3"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["payload"]["coefficients"].as_array().unwrap().len(), 3);
    let bad = Command::new(bin)
        .args(["coeffs", "--n", "2", "--t", "0.5"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_COLLISION));
}

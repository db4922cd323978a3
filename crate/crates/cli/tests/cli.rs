use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaussbound"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("invalid JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn decimal(v: &Value) -> f64 {
    v["decimal"].as_str().unwrap().parse().unwrap()
}

#[test]
fn certify_improved_one_dimensional() {
    let out = run(&["certify", "--n", "1", "--beta", "1", "--b0", "1", "--variant", "n1-improved"]);
    assert!(out.status.success());
    let r = json(&out);
    assert_eq!(num(&r["c"]), 0.125);
    assert!((decimal(&r["c_base"]) / 1.1227962448444267e5 - 1.0).abs() < 1e-12);
    assert!((num(&r["delta0"]) / 8.906335451260427e-6 - 1.0).abs() < 1e-12);
    assert_eq!(r["gamma_n"], 2);
}

#[test]
fn certify_three_dimensional_reports_underflow() {
    let out = run(&["certify", "--n", "3"]);
    assert!(out.status.success());
    let r = json(&out);
    assert!((num(&r["ln_c"]) - 1886.334676919818).abs() < 1e-9);
    assert_eq!(num(&r["delta0"]), 0.0);
    assert_eq!(r["delta0_underflow"], true);
    assert!(!r["notes"].as_array().unwrap().is_empty());
    assert!((num(&r["ln_delta0"]) + 1886.334676919818).abs() < 1e-9);
}

#[test]
fn certify_fill_distance_form() {
    let out = run(&["certify", "--n", "1", "--variant", "fill-distance", "--from", "n1-improved"]);
    assert!(out.status.success());
    let r = json(&out);
    let fd = &r["fill_distance"];
    assert_eq!(fd["derived_from"], "n1-improved");
    assert_eq!(num(&fd["c_exp_prime"]), 0.0625);
    assert!((num(&fd["d0"]) / (8.906335451260427e-6 / 2.0) - 1.0).abs() < 1e-12);
}

#[test]
fn invalid_dimension_is_a_usage_error() {
    for n in ["0", "21", "x"] {
        assert_eq!(run(&["certify", "--n", n]).status.code(), Some(2), "--n {n}");
    }
    assert_eq!(run(&["certify", "--n", "2", "--variant", "n1-improved"]).status.code(), Some(2));
    assert_eq!(run(&["certify", "--n", "1", "--beta", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_polybound_passes() {
    let out = run(&["verify", "--suite", "polybound", "--n", "2", "--k", "1", "--trials", "1000"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["pass"], true);
    assert_eq!(r["groups"][0]["trials"], 1000);
    assert_eq!(r["groups"][0]["violations"], 0);
}

#[test]
fn failed_inequalities_exit_one_with_cases() {
    // The Stirling upper bounds are known to fail at k = 2 and 3.
    let out = run(&["verify", "--suite", "stirling", "--kmax", "100"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(r["pass"], false);
    let ks: Vec<u64> = r["failing_cases"].as_array().unwrap().iter().map(|c| c["k"].as_u64().unwrap()).collect();
    assert_eq!(ks, [2, 3]);
}

#[test]
fn fill_distance_of_square_corners() {
    let pts = tmp("corners.csv");
    std::fs::write(&pts, "0,0\n1,0\n0,1\n1,1\n").unwrap();
    let out = run(&["fill-distance", "--points", pts.to_str().unwrap(), "--resolution", "64", "--delta", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    let (lo, hi) = (num(&r["lower"]), num(&r["upper"]));
    let exact = std::f64::consts::FRAC_1_SQRT_2;
    assert!(lo <= exact && exact <= hi, "[{lo}, {hi}]");
    assert_eq!(format!("{hi:.5}"), "0.70711");
    assert!(hi - lo < 0.02);
    let cover = &r["cover"];
    assert_eq!(cover["pass"], true);
    assert_eq!(cover["cells_per_axis"], 2);
    assert_eq!(cover["empty_cells"], 0);
}

#[test]
fn fill_distance_cover_witness() {
    let pts = tmp("one_point.csv");
    std::fs::write(&pts, "0.1\n").unwrap();
    let out = run(&["fill-distance", "--points", pts.to_str().unwrap(), "--delta", "0.5"]);
    let r = json(&out);
    assert_eq!(r["cover"]["pass"], false);
    assert_eq!(r["cover"]["witness_index"], serde_json::json!([1]));
}

#[test]
fn fit_then_eval_reproduces_data() {
    let data = tmp("fit_data.csv");
    let model = tmp("model.json");
    let points = tmp("eval_points.csv");
    let rows = [(0.0, 0.5), (0.7, -1.25), (1.3, 2.0), (2.2, 0.125), (3.0, -0.75)];
    let text: String = rows.iter().map(|(x, y)| format!("{x},{y}\n")).collect();
    std::fs::write(&data, text).unwrap();
    let xs: String = rows.iter().map(|(x, _)| format!("{x}\n")).collect();
    std::fs::write(&points, xs).unwrap();

    let out = run(&["fit", "--data", data.to_str().unwrap(), "--beta", "2", "--out", model.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["eval", "--model", model.to_str().unwrap(), "--points", points.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(reader.headers().unwrap(), vec!["x1", "s"]);
    let got: Vec<(f64, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    assert_eq!(got.len(), rows.len());
    for ((x, y), (gx, gy)) in rows.iter().zip(&got) {
        assert_eq!(x, gx);
        assert!((y - gy).abs() <= 1e-8 * 2.0, "s({x}) = {gy}, want {y}");
    }
}

#[test]
fn eval_rejects_dimension_mismatch() {
    let data = tmp("fit_1d.csv");
    let model = tmp("model_1d.json");
    let points = tmp("points_2d.csv");
    std::fs::write(&data, "0,1\n1,2\n").unwrap();
    std::fs::write(&points, "0,0\n").unwrap();
    assert!(run(&["fit", "--data", data.to_str().unwrap(), "--beta", "1", "--out", model.to_str().unwrap()]).status.success());
    let out = run(&["eval", "--model", model.to_str().unwrap(), "--points", points.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_csv_reports_line() {
    let data = tmp("bad.csv");
    std::fs::write(&data, "0,1\n0.5,2\n0.7,oops\n").unwrap();
    let out = run(&["fit", "--data", data.to_str().unwrap(), "--beta", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn ill_conditioned_fit_exits_three() {
    let data = tmp("close.csv");
    std::fs::write(&data, "0,1\n1e-9,-1\n").unwrap();
    let out = run(&["fit", "--data", data.to_str().unwrap(), "--beta", "1"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

fn converge_rows(extra: &[&str]) -> Vec<csv::StringRecord> {
    let mut args = vec!["converge"];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(reader.headers().unwrap().len(), 15);
    reader.records().map(|r| r.unwrap()).collect()
}

#[test]
fn converge_zero_target_is_exact() {
    for n in ["1", "2"] {
        let rows = converge_rows(&["--n", n, "--target", "zero"]);
        assert!(!rows.is_empty());
        for r in &rows {
            let err: f64 = r[5].parse().unwrap();
            assert!(err <= 1e-12, "delta {} error {err}", &r[0]);
        }
    }
}

#[test]
fn converge_one_dimensional_is_out_of_certificate() {
    let rows = converge_rows(&["--n", "1", "--beta", "1", "--b0", "1"]);
    let deltas: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(deltas, [0.2, 0.1, 0.05, 0.02, 0.01]);
    for r in &rows {
        assert_eq!(&r[4], "true");
        assert_eq!(&r[9], "out-of-certificate");
        assert!(r[10].parse::<f64>().unwrap().is_finite());
    }
}

#[test]
fn reports_are_deterministic() {
    let cases: [&[&str]; 3] = [
        &["converge", "--n", "2", "--seed", "7"],
        &["verify", "--suite", "polybound", "--trials", "50", "--seed", "7"],
        &["verify", "--suite", "inequality5", "--models", "2", "--phi-trials", "10", "--seed", "7"],
    ];
    for args in cases {
        let a = run(args);
        let b = run(args);
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn trials_csv_has_one_row_per_trial() {
    let path = tmp("trials.csv");
    let out = run(&["verify", "--suite", "polybound", "--n", "1", "--k", "2", "--trials", "25", "--trials-csv", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 26);
}

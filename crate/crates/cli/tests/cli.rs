use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hdqkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdqkit")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is a JSON report")
}

fn same_numbers(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| same_numbers(p, q)),
        (Value::Object(x), Value::Object(y)) => x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| same_numbers(v, w))),
        _ => a == b,
    }
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn clifford_suite_passes() {
    let o = hdqkit(&["validate", "clifford"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["suite"], "clifford");
    assert_eq!(r["pass"], true);
    assert!(r["elapsed_ms"].is_u64());
    for c in r["checks"].as_array().unwrap() {
        for key in ["name", "residual", "tolerance", "pass"] {
            assert!(c.get(key).is_some(), "{key} missing");
        }
    }
}

#[test]
fn hilbert_suite_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = hdqkit(&["validate", "hilbert", "--seed", "7", "--report", path(&out)]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let r: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["config"]["seed"], 7);
    assert_eq!(r["pass"], true);
}

#[test]
fn unattainable_tolerance_fails() {
    let o = hdqkit(&["validate", "moyal", "--grid", "64", "--tol", "1e-30"]);
    assert_eq!(code(&o), 1);
    assert_eq!(report(&o)["pass"], false);
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(code(&hdqkit(&["validate", "bogus"])), 2);
    assert_eq!(code(&hdqkit(&["validate", "hilbert", "--grid", "100"])), 2);
    assert_eq!(code(&hdqkit(&["validate", "hilbert", "--tol", "1.5"])), 2);
    assert_eq!(code(&hdqkit(&["validate", "hilbert", "--theta", "-1"])), 2);
    assert_eq!(code(&hdqkit(&["validate"])), 2);
    assert_eq!(code(&hdqkit(&["bench", "fft"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"theta": 2.0, "colour": 3}"#).unwrap();
    assert_eq!(code(&hdqkit(&["validate", "hilbert", "--config", path(&cfg)])), 2);
}

#[test]
fn config_precedence_is_cli_then_file_then_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"theta": 3.0, "seed": 11}"#).unwrap();
    let o = hdqkit(&["validate", "hilbert", "--config", path(&cfg), "--seed", "5"]);
    assert_eq!(code(&o), 0);
    let c = &report(&o)["config"];
    assert_eq!(c["theta"], 3.0);
    assert_eq!(c["seed"], 5);
    assert_eq!(c["grid"], 128);
    assert_eq!(c["trunc"], 8);
}

#[test]
fn reports_are_reproducible() {
    let strip = |o: &Output| {
        let mut r = report(o);
        r.as_object_mut().unwrap().remove("elapsed_ms");
        r
    };
    let a = hdqkit(&["validate", "hilbert", "--seed", "3"]);
    let b = hdqkit(&["validate", "hilbert", "--seed", "3"]);
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn bench_single_size_gives_one_row() {
    let o = hdqkit(&["bench", "moyal_fast", "--sizes", "32"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, [lines[0], lines[1]]);
    assert_eq!(lines[0], "size,wall_ms,residual");
    assert!(lines[1].starts_with("32,"));
}

#[test]
fn bench_residuals_shrink_with_m() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let o = hdqkit(&["bench", "moyal_fast", "--sizes", "16,32,64", "--out", path(&out)]);
    assert_eq!(code(&o), 0);
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let res: Vec<f64> = rdr.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert_eq!(res.len(), 3);
    assert!(res.windows(2).all(|w| w[1] <= w[0]), "{res:?}");
}

#[test]
fn bench_over_memory_gate_fails() {
    assert_eq!(code(&hdqkit(&["bench", "intertwiner", "--sizes", "64"])), 1);
}

#[test]
fn convert_copy_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let c = dir.path().join("c.csv");
    let d = dir.path().join("d.json");
    let data: Vec<String> = (0..64).map(|i| format!("[{}, {}]", 0.1 * i as f64, -0.25 * i as f64)).collect();
    fs::write(&a, format!(r#"{{"format":"HDQ1","n":1,"M":8,"L":3.0,"theta":2.0,"data":[{}]}}"#, data.join(","))).unwrap();
    assert_eq!(code(&hdqkit(&["convert", path(&a), path(&b)])), 0);
    assert_eq!(code(&hdqkit(&["convert", path(&b), path(&c), "--to", "csv"])), 0);
    assert_eq!(code(&hdqkit(&["convert", path(&c), path(&d), "--to", "HDQ1"])), 0);
    let parse = |p: &Path| serde_json::from_str::<Value>(&fs::read_to_string(p).unwrap()).unwrap();
    assert!(same_numbers(&parse(&a), &parse(&b)));
    assert_eq!(fs::read(&b).unwrap(), fs::read(&d).unwrap());
}

#[test]
fn convert_rejects_bad_input_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let out = dir.path().join("out.json");
    fs::write(&bad, r#"{"format":"HDQ1","n":1,"M":4}"#).unwrap();
    assert_eq!(code(&hdqkit(&["convert", path(&bad), path(&out)])), 2);
    fs::write(&bad, r#"{"format":"HDQM1","N":1,"theta":2.0,"coeffs":[[1,0]]}"#).unwrap();
    assert_eq!(code(&hdqkit(&["convert", path(&bad), path(&out), "--to", "HDQ5"])), 2);
    assert_eq!(code(&hdqkit(&["convert", path(&bad), path(&out), "--to", "HDQS1"])), 2);
    assert!(!out.exists());
}

#[test]
fn grid_matrix_grid_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let g = dir.path().join("g.json");
    let m2 = dir.path().join("m2.json");
    let coeffs: Vec<String> = (0..9).map(|k| format!("[{}, {}]", (k as f64).sin(), (k as f64).cos())).collect();
    fs::write(&m, format!(r#"{{"format":"HDQM1","N":3,"theta":2.0,"coeffs":[{}]}}"#, coeffs.join(","))).unwrap();
    assert_eq!(code(&hdqkit(&["convert", path(&m), path(&g), "--to", "HDQ1", "--grid", "128"])), 0);
    assert_eq!(code(&hdqkit(&["convert", path(&g), path(&m2), "--to", "HDQM1", "--trunc", "3"])), 0);
    let read = |p: &Path| serde_json::from_str::<Value>(&fs::read_to_string(p).unwrap()).unwrap();
    let (a, b) = (read(&m), read(&m2));
    assert_eq!(b["N"], 3);
    let flat = |v: &Value| -> Vec<f64> { v["coeffs"].as_array().unwrap().iter().flat_map(|z| z.as_array().unwrap().iter().map(|x| x.as_f64().unwrap())).collect() };
    let (x, y) = (flat(&a), flat(&b));
    let err: f64 = x.iter().zip(&y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = x.iter().map(|p| p * p).sum::<f64>().sqrt();
    assert!(err <= 1e-6 * norm, "{err}");
    assert_eq!(read(&g)["M"], 128);
}

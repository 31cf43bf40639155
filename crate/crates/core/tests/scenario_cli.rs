// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::Command;

use flowdiag::matrix::{reference_eigenvalues, DenseHermitian};
use flowdiag::scenario::{
    evaluate, parse_scenario, run_scenario, sweep, ComparisonReport, ExitStatus, Mode, Numeric, ScenarioError,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flowdiag"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn report(text: &str, mode: Mode) -> ComparisonReport {
    evaluate(&parse_scenario(text.as_bytes()).unwrap(), mode).unwrap().0
}

fn scalar(n: &Option<Numeric>) -> f64 {
    match n {
        Some(Numeric::Scalar(x)) => *x,
        other => panic!("expected a scalar, got {other:?}"),
    }
}

#[test]
fn quadratic_report_values() {
    let rep = report(r#"{"model":"quadratic","f0":1,"g0":0.6,"method":"both"}"#, Mode::Run);
    let ch = &rep.channels[0];
    let fe = scalar(&ch.method("fe").unwrap().numeric);
    let cut = scalar(&ch.method("cut").unwrap().numeric);
    assert!((fe - 0.8).abs() < 1e-8);
    assert!((cut - 0.8).abs() < 1e-8);
    assert!((fe - cut).abs() < 1e-8);
    assert_eq!(rep.status(), ExitStatus::Ok);
}

#[test]
fn gamma_sweep_has_nine_agreeing_records() {
    let rep = report(
        r#"{"model":"quadratic","f0":1,"g0":[0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9]}"#,
        Mode::Sweep,
    );
    assert_eq!(rep.channels.len(), 9);
    for (k, ch) in rep.channels.iter().enumerate() {
        assert_eq!(ch.index, k);
        assert!(ch.comparison["abs_difference"] < 1e-8, "{ch:?}");
    }
}

#[test]
fn eph_sweep_shift_decreases_with_delta() {
    let rep = report(
        r#"{"model":"eph","omega":1,"delta":[0,0.3,0.6],"m0":0.2,"method":"fe"}"#,
        Mode::Sweep,
    );
    let shifts: Vec<f64> = rep
        .channels
        .iter()
        .map(|c| scalar(&c.methods[0].numeric).abs())
        .collect();
    assert_eq!(shifts.len(), 3);
    assert!(shifts[0] > shifts[1] && shifts[1] > shifts[2], "{shifts:?}");
}

#[test]
fn eph_resonance_exit_two() {
    let dir = TempDir::new().unwrap();
    let p = write(
        dir.path(),
        "s.json",
        r#"{"model":"eph","omega":1,"delta":1,"m0":0.2,"v0":0,"method":"both"}"#,
    );
    let out = bin().arg("run").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let methods = v["channels"][0]["methods"].as_array().unwrap();
    let cut = methods.iter().find(|m| m["method"] == "cut").unwrap();
    let fe = methods.iter().find(|m| m["method"] == "fe").unwrap();
    assert_eq!(cut["error"]["kind"], "resonance");
    assert!(fe["numeric"].is_f64());
}

#[test]
fn matrix_seed_42_matches_jacobi() {
    let rep = report(r#"{"model":"matrix","n":8,"seed":42,"method":"fe"}"#, Mode::Run);
    let rec = &rep.channels[0].methods[0];
    assert!(rec.error.is_none(), "{rec:?}");
    // Rebuild the same matrix independently of the scenario code.
    let h = DenseHermitian::random(8, &mut ChaCha8Rng::seed_from_u64(42));
    let eigs = reference_eigenvalues(&h).unwrap();
    let Some(Numeric::Vector(diag)) = &rec.numeric else {
        panic!()
    };
    assert_eq!(diag.len(), 8);
    for (a, b) in diag.iter().zip(&eigs) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn matrix_one_step_route() {
    let rep = report(
        r#"{"model":"matrix","matrix":{"n":2,"re":[1,0.5,0.5,2],"im":[0,0,0,0]},
            "generator":{"n":2,"re":[0,1,-1,0],"im":[0,0,0,0]},"theta":0.3,"method":"cut"}"#,
        Mode::Run,
    );
    let rec = &rep.channels[0].methods[0];
    assert!(rec.abs_error.unwrap() < 1e-8, "{rec:?}");
    assert_eq!(rep.status(), ExitStatus::Ok);
}

#[test]
fn exit_status_validation_and_io() {
    let dir = TempDir::new().unwrap();
    let bogus = write(dir.path(), "b.json", r#"{"model":"bogus"}"#);
    let out = bin().arg("run").arg(&bogus).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["field"], "model");

    let broken = write(dir.path(), "m.json", "{\"model\": \"quadratic\",\n \"f0\": }");
    let out = bin().arg("run").arg(&broken).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "parse");
    assert_eq!(err["line"], 2);

    let out = bin().arg("run").arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(3));

    let unwritable = dir.path().join("no_such_dir").join("r.json");
    let text = format!(
        r#"{{"model":"quadratic","f0":1,"g0":0.5,"outputs":{{"report_json":{}}}}}"#,
        Value::from(unwritable.to_str().unwrap())
    );
    let p = write(dir.path(), "w.json", &text);
    let out = bin().arg("run").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(3));

    let out = bin()
        .arg("sweep")
        .arg(&p)
        .env("FLOWDIAG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn exit_status_ok_and_residual_exceeded() {
    let dir = TempDir::new().unwrap();
    let ok = write(dir.path(), "ok.json", r#"{"model":"quadratic","f0":1,"g0":0.5}"#);
    assert_eq!(bin().arg("run").arg(&ok).output().unwrap().status.code(), Some(0));
    let strict = write(
        dir.path(),
        "s.json",
        r#"{"model":"quadratic","f0":1,"g0":0.5,"residual_tolerance":0}"#,
    );
    let out = bin().arg("run").arg(&strict).output().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let drift = v["channels"][0]["methods"][0]["residuals"]["invariant_drift"]
        .as_f64()
        .unwrap();
    let expected = if drift > 0.0 { 1 } else { 0 };
    assert_eq!(out.status.code(), Some(expected));
}

#[test]
fn empty_arrays_and_cap_are_validation_errors() {
    let s = parse_scenario(br#"{"model":"eph","omega":[],"delta":0,"m0":0.1}"#).unwrap();
    assert!(matches!(sweep(&s), Err(ScenarioError::Validation { .. })));
    let s = parse_scenario(br#"{"model":"eph","omega":[1,2],"delta":[0,1],"m0":[0.1,0.2],"sweep_cap":7}"#).unwrap();
    assert!(matches!(sweep(&s), Err(ScenarioError::Validation { ref field, .. }) if field == "sweep_cap"));
}

#[test]
fn sweep_reports_are_byte_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let text =
        r#"{"model":"threeboson","beta1":[0.5,1,2],"beta2":[1,4],"psi1":[[0.1,0.2],[0.3,-0.1]],"psi2":[0.2,0.0]}"#;
    let p = write(dir.path(), "t.json", text);
    let run = |threads: &str| {
        bin()
            .arg("sweep")
            .arg(&p)
            .env("FLOWDIAG_THREADS", threads)
            .output()
            .unwrap()
    };
    let a = run("1");
    let b = run("3");
    let c = run("1");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["channels"].as_array().unwrap().len(), 12);
    let coords: Vec<Value> = v["channels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["coords"].clone())
        .collect();
    assert_eq!(coords[1], serde_json::json!([0, 0, 1, 0, 0]));
    assert_eq!(coords[2], serde_json::json!([0, 1, 0, 0, 0]));
}

#[test]
fn report_and_csv_numbers_round_trip() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("traj.csv");
    let json = dir.path().join("report.json");
    let text = format!(
        r#"{{"model":"quadratic","f0":1,"g0":0.3,"outputs":[{{"trajectory_csv":{},"report_json":{}}}]}}"#,
        Value::from(csv.to_str().unwrap()),
        Value::from(json.to_str().unwrap())
    );
    let out = run_scenario(&parse_scenario(text.as_bytes()).unwrap()).unwrap();
    assert_eq!(out.written, vec![json.clone(), csv.clone()]);

    let written = std::fs::read_to_string(&json).unwrap();
    assert_eq!(written, out.report.to_json_string());
    let fe = out.report.channels[0].method("fe").unwrap();
    let parsed: Value = serde_json::from_str(&written).unwrap();
    let back = parsed["channels"][0]["methods"][0]["numeric"].as_f64().unwrap();
    assert_eq!(back.to_bits(), scalar(&fe.numeric).to_bits());

    let table = std::fs::read_to_string(&csv).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "method,l,f,g,invariant");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), out.trajectories[0].rows.len());
    for (line, (method, values)) in rows.iter().zip(&out.trajectories[0].rows) {
        let mut cells = line.split(',');
        assert_eq!(cells.next().unwrap(), method);
        for (cell, v) in cells.zip(values) {
            assert_eq!(cell.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}

#[test]
fn spins_trajectory_columns() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("spins.csv");
    let text = format!(
        r#"{{"model":"spins","n":3,"omega0":1,"alpha":1,"J":[[0,1,0],[1,0,1],[0,1,0]],"t_end":0.5,"outputs":{{"trajectory_csv":{}}}}}"#,
        Value::from(csv.to_str().unwrap())
    );
    let out = run_scenario(&parse_scenario(text.as_bytes()).unwrap()).unwrap();
    assert_eq!(out.status(), ExitStatus::Ok);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().next().unwrap(), "t,W_1,W_2,W_3,trace_check,purity_check");
}

#[test]
fn selftest_passes() {
    let out = bin().arg("selftest").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 8, "{text}");
    assert_eq!(out.status.code(), Some(0));
}

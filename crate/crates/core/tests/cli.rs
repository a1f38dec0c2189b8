use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lossphase"))
        .args(args)
        .env_remove("LOSSPHASE_JOBS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// First row of a JSON report.
fn row(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let doc: Value = serde_json::from_str(&ok(&full)).unwrap();
    assert!(doc["meta"]["version"].is_string());
    doc["rows"][0].clone()
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} missing in {v}"))
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn optimal_examples() {
    let r = row(&["optimal", "--n", "10", "--eta-a", "1", "--eta-b", "1"]);
    assert!((num(&r, "cost_opt") - (2.0 - 2.0 * (PI / 12.0).cos())).abs() < 1e-12);
    assert!((num(&r, "dphi_opt") - num(&r, "cost_opt").sqrt()).abs() < 1e-15);

    let r = row(&["optimal", "--n", "1", "--eta-a", "0.64", "--eta-b", "1"]);
    assert!((num(&r, "cost_opt") - 1.2).abs() < 1e-12);
    assert!((num(&r, "lambda_max") - 0.8).abs() < 1e-12);

    let r = row(&["optimal", "--n", "0", "--eta-a", "0.5", "--eta-b", "0.5"]);
    assert_eq!(num(&r, "cost_opt"), 2.0);
}

#[test]
fn optimal_writes_state_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.csv");
    ok(&["optimal", "--n", "6", "--eta", "0.7", "--state-out", path.to_str().unwrap()]);
    let text = std::fs::read_to_string(&path).unwrap();
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 7);
    let norm: f64 = rows.iter().map(|r| r[1].parse::<f64>().unwrap().powi(2)).sum();
    assert!((norm - 1.0).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["optimal"]).status.code(), Some(2));
    assert_eq!(run(&["optimal", "--n", "3", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["optimal", "--n", "3", "--eta", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["optimal", "--n", "3", "--eta", "0.5", "--eta-a", "0.4"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--n", "5,3"]).status.code(), Some(2));
    assert_eq!(run(&["bounds", "--eta-a", "0.5", "--eta-b", "0.9", "--equal-arms", "--n", "4"]).status.code(), Some(2));
    assert_eq!(run(&["classical", "--eta", "0.5"]).status.code(), Some(2));

    // An unattainable residual target is a numerical failure with diagnostics.
    let out = run(&["optimal", "--n", "50", "--eta", "0.7", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("residual"), "{err}");
}

#[test]
fn lossless_sweep_closed_form() {
    let text = ok(&["sweep", "--n", "1..100", "--eta", "1"]);
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 100);
    for r in &rows {
        let n: f64 = r[0].parse().unwrap();
        let dphi: f64 = r[4].parse().unwrap();
        assert!((dphi - (2.0 - 2.0 * (PI / (n + 2.0)).cos()).sqrt()).abs() < 1e-10);
        // No 1/N floor without loss, so no gain factor either.
        assert_eq!(&r[9], "");
    }
}

#[test]
fn sweep_header_and_constant_width() {
    let text = ok(&["sweep", "--n", "0,1,5", "--loss", "0:1,0.5:0.9"]);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "N,eta_a,eta_b,cost_opt,dphi_opt,bound_finite,dphi_bound,cost_classical,dphi_classical,gain,error"
    );
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r.len(), 11);
        for field in r.iter().skip(1).take(9).filter(|f| !f.is_empty()) {
            assert!(field.parse::<f64>().unwrap().is_finite());
        }
        assert_eq!(&r[10], "");
    }
    // Ascending N, then the given loss order.
    let keys: Vec<(&str, &str)> = rows.iter().map(|r| (r.get(0).unwrap(), r.get(1).unwrap())).collect();
    assert_eq!(keys[0].0, "0");
    assert_eq!(keys[1].0, "0");
    assert!(keys[0].1.starts_with("0.0"));
}

#[test]
fn sweep_at_two_thousand_photons() {
    let rows = csv_rows(&ok(&["sweep", "--n", "2000", "--eta", "0.8", "--outputs", "optimal"]));
    let n_cost = 2000.0 * rows[0][3].parse::<f64>().unwrap();
    assert!((0.25..=1.25).contains(&n_cost), "{n_cost}");
}

#[test]
fn parallel_sweep_is_byte_identical() {
    let args = ["sweep", "--n", "log:1..300:6", "--loss", "0.9:0.9,0.4:1,1:1"];
    let serial = ok(&[&args[..], &["--jobs", "1"]].concat());
    let parallel = ok(&[&args[..], &["--jobs", "8"]].concat());
    assert_eq!(serial, parallel);
    let env = Command::new(env!("CARGO_BIN_EXE_lossphase"))
        .args(args)
        .env("LOSSPHASE_JOBS", "3")
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(env.stdout).unwrap(), serial);
    assert_eq!(run(&[&args[..], &["--jobs", "0"]].concat()).status.code(), Some(2));
}

fn sweep_to(path: &Path, n: &str, format: &str) -> String {
    ok(&["sweep", "--n", n, "--eta", "0.85", "--format", format, "--out", path.to_str().unwrap()]);
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn sweep_resumes_from_existing_output() {
    let dir = tempfile::tempdir().unwrap();
    for format in ["csv", "json"] {
        let full = sweep_to(&dir.path().join(format!("full.{format}")), "1..12", format);
        let path = dir.path().join(format!("part.{format}"));
        sweep_to(&path, "1,4,9", format);
        let resumed = sweep_to(&path, "1..12", format);
        assert_eq!(resumed, full, "{format}");
    }

    // Existing rows are reused rather than recomputed.
    let path = dir.path().join("edited.csv");
    let text = sweep_to(&path, "2", "csv");
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<&str> = lines[1].split(',').collect();
    fields[3] = "1.0000000000000000e0";
    lines[1] = fields.join(",");
    let edited = lines.join("\n") + "\n";
    std::fs::write(&path, &edited).unwrap();
    let resumed = sweep_to(&path, "2,3", "csv");
    assert!(resumed.starts_with(&edited));

    // A file with another column set is refused, not overwritten.
    let out = run(&["sweep", "--n", "2,3", "--eta", "0.85", "--outputs", "optimal", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), resumed);
}

#[test]
fn sweep_json_document() {
    let doc: Value = serde_json::from_str(&ok(&["sweep", "--n", "3,4", "--eta", "0.7", "--format", "json"])).unwrap();
    assert_eq!(doc["config"]["n_values"], serde_json::json!([3, 4]));
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
    assert!(doc["meta"]["tol"].is_number());
    assert!(doc["rows"][1]["error"].is_null());
    assert_eq!(doc["rows"][1]["N"], 4);
}

#[test]
fn profile_inset() {
    let doc: Value = serde_json::from_str(&ok(&["sweep", "--n", "100", "--profile", "--format", "json"])).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    let etas: Vec<f64> = rows.iter().map(|r| num(r, "eta_a")).collect();
    assert_eq!(etas, vec![1.0, 0.8, 0.6]);
    let ipr: Vec<f64> = rows.iter().map(|r| num(r, "ipr")).collect();
    assert!(ipr[2] > ipr[1] && ipr[1] > ipr[0], "{ipr:?}");
    for r in rows {
        assert_eq!(r["alpha"].as_array().unwrap().len(), 101);
    }
    let csv_text = ok(&["sweep", "--n", "100", "--profile"]);
    assert_eq!(csv_text.lines().next().unwrap(), "N,eta_a,eta_b,ipr,n,alpha,error");
}

#[test]
fn bounds_examples() {
    let r = row(&["bounds", "--n", "1000", "--eta", "0.8", "--equal-arms"]);
    assert!((num(&r, "bound_asymptotic") - 2.5e-4).abs() < 1e-15);

    let r = row(&["bounds", "--eta", "0.8", "--gain", "--equal-arms"]);
    assert!((num(&r, "gain") - 5f64.sqrt()).abs() < 1e-12);

    let r = row(&["bounds", "--n", "10", "--eta", "1"]);
    assert!((num(&r, "bound_finite") - (2.0 - 2.0 * (PI / 12.0).cos())).abs() < 1e-12);
    assert_eq!(r["gain"], "unbounded");
    let text = ok(&["bounds", "--n", "10", "--eta", "1"]);
    assert!(text.lines().any(|l| l.starts_with("gain") && l.ends_with("unbounded")));

    let r = row(&["bounds", "--eta-a", "0.64", "--eta-b", "1", "--gain"]);
    assert!((num(&r, "gain") - 3.0).abs() < 1e-12);
}

#[test]
fn classical_examples() {
    let r = row(&["classical", "--n", "10000", "--eta-a", "0.8", "--eta-b", "0.8"]);
    assert!((num(&r, "n_cost") - 1.25).abs() < 0.0125);
    let r = row(&["classical", "--tau-opt", "--eta-a", "0.25", "--eta-b", "1"]);
    assert!((num(&r, "tau") - 2.0 / 3.0).abs() < 1e-12);
    let r = row(&["classical", "--n", "10000", "--eta-a", "1", "--eta-b", "1"]);
    assert!((num(&r, "n_cost") - 1.0).abs() < 0.01);

    let r = row(&["classical", "--n", "100000", "--eta-a", "0.5", "--eta-b", "0.9", "--minimize"]);
    assert!((num(&r, "tau") - 1.0 / (1.0 + (0.5f64 / 0.9).sqrt())).abs() < 1e-3);

    let out = run(&["classical", "--n", "50", "--tau", "1", "--format", "json"]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["rows"][0]["cost_classical"], 2.0);
    assert_eq!(doc["rows"][0]["degenerate_split"], true);
}

#[test]
fn simulate_examples() {
    let r = row(&["simulate", "--n", "20", "--eta", "0.8", "--samples", "1000000", "--seed", "7"]);
    let gap = (num(&r, "mean_cost") - num(&r, "cost_opt")).abs();
    assert!(gap <= 4.0 * num(&r, "std_error"), "{r}");

    let r = row(&["simulate", "--n", "0", "--samples", "1000"]);
    assert!((num(&r, "mean_cost") - 2.0).abs() <= 4.0 * num(&r, "std_error"));
    assert_eq!(r["seed"], 2013);

    let args = ["simulate", "--n", "6", "--eta", "0.5", "--samples", "5000", "--seed", "11", "--format", "csv"];
    assert_eq!(ok(&args), ok(&args));
    assert_ne!(ok(&args), ok(&["simulate", "--n", "6", "--eta", "0.5", "--samples", "5000", "--seed", "12", "--format", "csv"]));
}

use std::fs;
use std::process::{Command, Output};

use bergman_suita::suita::ExperimentReport;

fn suita(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_suita"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn g2_ratio() {
    let o = suita(&["suita-f", "--g2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let f = v["ratio"]["f"].as_f64().unwrap();
    assert!((f - 2.0 / 3f64.sqrt()).abs() < 1e-12);
    assert!(String::from_utf8_lossy(&o.stderr).contains("F = 1.1547005"));
}

#[test]
fn validation_errors_exit_one() {
    assert_eq!(suita(&["kernel", "--annulus", "1.5", "--w", "sqrt"]).status.code(), Some(1));
    assert_eq!(suita(&["kernel", "--annulus", "0.2", "--w", "0.1"]).status.code(), Some(1));
    assert_eq!(suita(&["kernel", "--bogus"]).status.code(), Some(1));
    assert_eq!(suita(&["kernel", "--domain", "{\"variant\":\"cube\"}"]).status.code(), Some(1));
    assert_eq!(suita(&["scan", "--family", "ell1", "--m", "0.5", "--n", "1..3"]).status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_two() {
    let o = suita(&["experiment", "monotonicity", "--annulus", "0.2", "--samples", "4", "--t=-6,-1"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn kernel_csv_and_domain_file() {
    let o = suita(&["kernel", "--annulus", "0.2", "--w", "sqrt", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("method,value,error_bound\nannulus-series,"));

    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("ball.json");
    fs::write(&spec, r#"{"variant":"ball","n":2}"#).unwrap();
    let o = suita(&["kernel", "--domain", &format!("@{}", spec.display()), "--w", "0,0"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let k = v["kernel"]["value"].as_f64().unwrap();
    assert!((k - 2.0 / std::f64::consts::PI.powi(2)).abs() < 1e-14);
}

#[test]
fn figure_scan_roundtrip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = suita(&[
            "scan", "--family", "ell1", "--m", "0.5", "--n", "2..6", "--grid", "200", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        path
    };
    let first = run("fig1.csv");
    let second = run("again.csv");
    let csv = fs::read_to_string(&first).unwrap();
    assert_eq!(csv, fs::read_to_string(&second).unwrap());
    assert_eq!(
        fs::read_to_string(first.with_extension("json")).unwrap(),
        fs::read_to_string(second.with_extension("json")).unwrap()
    );
    assert_eq!(csv.lines().count(), 1 + 5 * 200);
    assert_eq!(csv.lines().next(), Some("curve,b,F"));

    let report = ExperimentReport::from_json(&fs::read_to_string(first.with_extension("json")).unwrap()).unwrap();
    let mut reread = report.clone();
    reread.samples = ExperimentReport::samples_from_csv(&csv).unwrap();
    assert_eq!(reread.samples, report.samples);
    assert_eq!(reread.recheck(), report.verdicts);
}

#[test]
fn experiment_is_deterministic() {
    let args = ["experiment", "lower-bound", "--annulus", "0.2", "--samples", "65536", "--t=-3,-2", "--seed", "7"];
    let a = suita(&args);
    let b = suita(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let report = ExperimentReport::from_json(&stdout(&a)).unwrap();
    assert_eq!(report.metadata.seed, 7);
    assert!(report.passed());
}

#[test]
fn family_maximum() {
    let o = suita(&["suita-f", "--family", "ell1", "--m", "0.5", "--n", "3", "--maximize"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let f = v["maximum"]["f"].as_f64().unwrap();
    assert!((f - 1.0041178661).abs() < 1e-9, "{f}");
}

#[test]
fn verify_all_quick_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("acceptance.json");
    let o = suita(&["verify-all", "--quick", "--out", out.to_str().unwrap()]);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| l.starts_with('[')).collect();
    assert_eq!(rows.len(), 11, "{text}");
    let results: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(results.as_array().unwrap().len(), 11);
    // the exit status follows the table: 0 only when every row passes
    let all_pass = rows.iter().all(|r| r.starts_with("[PASS]"));
    assert_eq!(o.status.code(), Some(if all_pass { 0 } else { 2 }));
}

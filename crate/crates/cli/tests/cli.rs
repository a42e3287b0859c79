use std::process::{Command, Output};

use serde_json::Value;

const UNIT_DISK: &str = r#"{"type":"ball","center":[0,0],"radius":1}"#;
const UNIT_BALL: &str = r#"{"type":"ball","center":[0,0,0],"radius":1}"#;

fn mhelm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhelm")).args(args).env_remove("MHELM_WORKERS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn tables_rows_match_closed_forms() {
    let o = mhelm(&["tables", "--m", "3", "--t-min", "0", "--t-max", "1", "--steps", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], vec![0.0, 1.0, 1.0]);
    assert!((rows[1][1] - 1.1036383).abs() < 1e-7);
    assert!((rows[1][2] - 1.0_f64.sinh()).abs() < 1e-15);
}

#[test]
fn verify_exit_codes() {
    assert_eq!(mhelm(&["verify", "all", "--cases", "5"]).status.code(), Some(0));
    let ineq = mhelm(&["verify", "ineq7", "--lambda", "0.5"]);
    assert_eq!(ineq.status.code(), Some(0));
    for line in stdout(&ineq).lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["passed"], Value::Bool(true));
    }
    assert_eq!(mhelm(&["verify", "bogus"]).status.code(), Some(2));
}

#[test]
fn detect_verdicts_and_errors() {
    let ball = mhelm(&["detect", "--domain", UNIT_DISK, "--x0", "0,0", "--samples", "10000"]);
    assert_eq!(ball.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&ball)).unwrap();
    assert_eq!(v["verdict"], "ball");
    let square = r#"{"type":"box","lo":[-1,-1],"hi":[1,1]}"#;
    let not_ball = mhelm(&["detect", "--domain", square, "--x0", "0,0", "--samples", "100000"]);
    assert_eq!(not_ball.status.code(), Some(3));
    assert_eq!(mhelm(&["detect", "--domain", UNIT_DISK, "--x0", "3,0"]).status.code(), Some(2));
    assert_eq!(mhelm(&["detect", "--domain", "{bad"]).status.code(), Some(2));
}

#[test]
fn detect_reads_domain_file_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let domain = dir.path().join("disk.json");
    std::fs::write(&domain, UNIT_DISK).unwrap();
    let out = dir.path().join("verdict.json");
    let o = mhelm(&["detect", "--domain", domain.to_str().unwrap(), "--samples", "1000", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let verdict: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(verdict["verdict"], "ball");
    let manifest: Value = serde_json::from_slice(&std::fs::read(dir.path().join("verdict.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "detect");
}

#[test]
fn wos_estimates_and_errors() {
    let o = mhelm(&["wos", "--domain", UNIT_BALL, "--g", "solution:kernel0", "--point", "0,0,0", "--walks", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["results"][0]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let o = mhelm(&["wos", "--domain", UNIT_BALL, "--g", "const:1", "--point", "0,0,0", "--walks", "1000"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["results"][0]["value"].as_f64().unwrap() - 0.8509181).abs() < 1e-7);

    assert_eq!(mhelm(&["wos", "--domain", UNIT_BALL, "--g", "const:1"]).status.code(), Some(2));
    assert_eq!(mhelm(&["wos", "--domain", UNIT_BALL, "--g", "nope", "--point", "0,0,0"]).status.code(), Some(2));
}

#[test]
fn explore_reports_are_exploratory() {
    let ellipse = r#"{"type":"ellipsoid","center":[0,0],"semi_axes":[1.2,0.8333333333333334]}"#;
    let o = mhelm(&["explore", "--domain", ellipse]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["exploratory"], Value::Bool(true));
}

use std::path::PathBuf;
use std::process::{Command, Output};

fn job(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/jobs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ineqcert")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn eval_shafer_bound_at_one() {
    let o = run(&["eval", "3*x/(2+sqrt(1-x^2))", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 1.5);
}

#[test]
fn refuted_job_exits_two() {
    let o = run(&["prove", job("refute_example.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let cert: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(cert["verdict"], "refuted-candidate");
    assert_eq!(cert["witness"]["reason"], "alpha < 0");
}

#[test]
fn prove_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["jordan.toml", "arcsin_new.toml"] {
        let cert = dir.path().join(format!("{name}.json"));
        let o = run(&["prove", job(name).to_str().unwrap(), "--out", cert.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}{}", stdout(&o), stderr(&o));
        let o = run(&["verify", cert.to_str().unwrap(), "--resample", "1024"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
        assert!(stdout(&o).contains("PASS residual"));
    }
}

#[test]
fn tampered_certificate_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("c.json");
    let o = run(&["prove", job("jordan.toml").to_str().unwrap(), "--out", cert.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&cert).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["poly"]["coeffs"][0] = serde_json::json!(v["poly"]["coeffs"][0].as_f64().unwrap() + 1e-3);
    std::fs::write(&cert, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let o = run(&["verify", cert.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("FAIL digest"));
}

#[test]
fn approx_prints_polynomial_and_error() {
    let o = run(&["approx", job("kurepa.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let field = |k: &str| -> f64 {
        let line = out.lines().find(|l| l.starts_with(k)).unwrap();
        line[k.len()..].split_whitespace().next().unwrap().parse().unwrap()
    };
    assert!((field("eps: ") / 0.04232 - 1.0).abs() < 0.1, "{out}");
    assert!((field("c1: ") + 0.531115454).abs() < 1e-3, "{out}");
    assert!((field("alpha: ") - 0.963321189).abs() < 1e-8, "{out}");
}

#[test]
fn malformed_job_is_positioned() {
    let o = run(&["prove", job("malformed.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 6") && err.contains("degre"), "{err}");
}

#[test]
fn casebook_theorem1_reports_its_error_bound() {
    let o = run(&["casebook", "theorem1_kurepa"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("case theorem1_kurepa: PASS") && out.contains("eps_raw 4.23"), "{out}");
}

#[test]
fn casebook_json_nests_certificates() {
    let o = run(&["casebook", "chain_fink", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["case"], "chain_fink");
    assert_eq!(v["jobs"].as_array().unwrap().len(), 2);
    assert_eq!(v["jobs"][0]["certificate"]["schema"], "cert-v1");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["eval", "x"]).status.code(), Some(1));
    assert_eq!(run(&["eval", "x", "1", "--precision", "quad"]).status.code(), Some(1));
    assert_eq!(run(&["list", "--help"]).status.code(), Some(0));
}

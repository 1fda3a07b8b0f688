use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn matsos(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_matsos"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    if let Some(s) = stdin {
        child.stdin.take().unwrap().write_all(s.as_bytes()).unwrap();
    }
    child.wait_with_output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn untimed(mut v: Value) -> Value {
    v["timing_ms"] = Value::Null;
    v
}

#[test]
fn list_is_sorted_and_stable() {
    let a = matsos(&["list"], None);
    let b = matsos(&["list"], None);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let names: Vec<String> = json(&a).as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap().to_string()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert_eq!(names.len(), 8);
}

#[test]
fn schema_names_the_version() {
    let o = matsos(&["schema"], None);
    assert!(o.status.success());
    assert_eq!(json(&o)["properties"]["version"]["const"], 1);
}

#[test]
fn q_lambda_gallery_report() {
    let o = matsos(&["gallery", "q-lambda", "--params", r#"{"lambda": 0.02}"#], None);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["schema"], "matsos-report/1");
    assert!((r["certificates"]["non_sos"]["bound"].as_f64().unwrap() - 3.6).abs() < 1e-12);
    assert_eq!(r["certificates"]["non_sos"]["verdict"], "not-sos-of-linear-forms");
    let pos = r["checks"].as_array().unwrap().iter().find(|c| c["condition"] == "q-lambda-positivity").unwrap();
    assert_eq!(pos["verdict"], "pass");
}

#[test]
fn epsilon_below_quarter_is_rejected() {
    let cfg = r#"{"version": 1, "matrix": {"gallery": {"name": "grushin-2x2"}}, "pipeline": "decompose",
                 "params": {"p": 2, "epsilon": 0.1, "delta": 0.1, "delta_pp": 0.2}}"#;
    let o = matsos(&["run", "--config", "-"], Some(cfg));
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("params.epsilon"), "{err}");
}

#[test]
fn grushin_run_and_rerun_are_identical() {
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/grushin_decompose.json");
    let a = matsos(&["run", "--config", cfg, "--seed", "3"], None);
    let b = matsos(&["run", "--config", cfg, "--seed", "3", "--threads", "2"], None);
    assert_eq!(a.status.code(), Some(0));
    let (ra, rb) = (json(&a), json(&b));
    assert_eq!(untimed(ra.clone()), untimed(rb));
    assert!(ra["decomposition"]["reconstruction_max_error"].as_f64().unwrap() <= 1e-10);
    assert_eq!(ra["decomposition"]["residual"]["size"], 1);
    assert_eq!(ra["config"]["seed"], 3);
}

#[test]
fn expected_failure_items_pass() {
    for name in ["nondiag-noncomparable-2x2", "block-N8"] {
        let o = matsos(&["gallery", name], None);
        assert_eq!(o.status.code(), Some(0), "{name}");
    }
}

#[test]
fn refusal_exits_with_two() {
    // peeling through the flat block of M is refused
    let cfg = r#"{"version": 1, "matrix": {"gallery": {"name": "block-M7"}}, "pipeline": "decompose",
                 "params": {"p": 8, "epsilon": 0.3, "delta": 0.1, "delta_pp": 0.2, "holder_centers": 2},
                 "grid": {"nvars": 4, "points": {"kind": "shells", "dim": 4, "radii": {"kind": "geometric", "min": 0.1, "max": 0.9, "count": 6}, "directions": 8}}}"#;
    let o = matsos(&["run", "--config", "-"], Some(cfg));
    let r = json(&o);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!r["refusal"]["failed"].as_array().unwrap().is_empty());
}

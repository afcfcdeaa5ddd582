use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_willmore-com"));
    c.env_remove("WILLMORE_OUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn willmore-com")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

/// result.json with the timestamp removed.
fn result_without_stamp(dir: &Path) -> Value {
    let text = fs::read_to_string(dir.join("result.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn e1_experiment_writes_report_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["experiment", "E1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS")));
    assert!(!stdout.lines().any(|l| l.starts_with("FAIL")));
    let v = result_without_stamp(dir.path());
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["config"]["id"], "E1");
    let csv = fs::read_to_string(dir.path().join("traces.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn e1_report_is_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "4")] {
        let out = run(&[
            "experiment",
            "E1",
            "--threads",
            threads,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(
        result_without_stamp(a.path()),
        result_without_stamp(b.path())
    );
    assert_eq!(
        fs::read(a.path().join("traces.csv")).unwrap(),
        fs::read(b.path().join("traces.csv")).unwrap()
    );
}

#[test]
fn g_eval_on_schwarzschild_is_g1() {
    let v = json(&run(&["g-eval", "--lambda", "100", "--xi", "-0.2,0,0"]));
    let g1 = v["g1"].as_f64().unwrap();
    assert_eq!(v["g2"].as_f64().unwrap(), 0.0);
    assert!(g1 > 0.0);
    // ∇G points away from the origin.
    assert!(v["grad_g"][0].as_f64().unwrap() < 0.0);
}

#[test]
fn hawking_and_adm_on_schwarzschild() {
    let v = json(&run(&["hawking", "--lambda", "50"]));
    assert!((v["hawking_mass"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    // The flux at finite radius is 2(1 + 3/λ + …); the limit is 2.
    let v = json(&run(&["adm", "--lambda", "1000"]));
    assert!((v["mass"].as_f64().unwrap() - 2.006).abs() < 1e-4);
    let v = json(&run(&["adm", "--radii", "1000,2000,4000"]));
    assert!((v["mass_limit"]["limit"].as_f64().unwrap() - 2.0).abs() < 1e-3);
}

#[test]
fn show_config_round_trips_through_config_file() {
    let out = run(&["show-config", "e2"]);
    assert!(out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e2.json");
    fs::write(&path, &out.stdout).unwrap();
    let cfg: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg["id"], "E2");
    let v = json(&run(&[
        "g-eval",
        "--config",
        path.to_str().unwrap(),
        "--lambda",
        "4000",
        "--xi",
        "0,0,0.001",
    ]));
    assert!(v["g2"].as_f64().unwrap() != 0.0);
}

#[test]
fn invalid_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{"id": "E1", "model": {}, "lambdas": {"kind": "list", "values": [100]}, "bogus": 1}"#,
    )
    .unwrap();
    let out = run(&["trace", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let out = run(&["g-eval", "--lambda", "100", "--xi", "1.5,0,0"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["experiment", "E9"]);
    assert!(!out.status.success());
}

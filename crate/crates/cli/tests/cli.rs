//! Process-level contract: exit codes, JSON shapes, determinism.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_muq"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("muq-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const BELL_CIRCUIT: &str = r#"{
  "p": 1,
  "u_gates": [
    {"targets": [0], "matrix": [[0.7071067811865476,0],[0.7071067811865476,0],
                                 [0.7071067811865476,0],[-0.7071067811865476,0]]},
    {"targets": [0,1], "matrix": [[1,0],[0,0],[0,0],[0,0],
                                   [0,0],[1,0],[0,0],[0,0],
                                   [0,0],[0,0],[0,0],[1,0],
                                   [0,0],[0,0],[1,0],[0,0]]}
  ],
  "v_gates": []
}"#;

fn raw_identity_instance(c: f64, gamma: f64, epsilon: f64) -> String {
    let zero = "[0.0,0.0]";
    let mut rows = Vec::new();
    for r in 0..4 {
        let cells: Vec<String> = (0..4)
            .map(|cc| if cc == r { format!("[{c},0.0]") } else { zero.to_string() })
            .collect();
        rows.push(format!("[{}]", cells.join(",")));
    }
    format!(
        r#"{{"q": [{}], "dim_y": 2, "dim_x": 2, "gamma": {gamma}, "epsilon": {epsilon}}}"#,
        rows.join(",")
    )
}

#[test]
fn condition_then_solve_then_verify_pipeline() {
    let dir = workdir("pipeline");
    let inst = dir.join("inst.json");
    fs::write(&inst, BELL_CIRCUIT).unwrap();
    let cond = dir.join("cond.json");

    let out = bin()
        .args(["condition", "--input"])
        .arg(&inst)
        .arg("--output")
        .arg(&cond)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let parsed: serde_json::Value = serde_json::from_str(&fs::read_to_string(&cond).unwrap()).unwrap();
    assert_eq!(parsed["k"], 2);
    assert_eq!(parsed["dim_x"], 2); // maximally entangled: the whole bin survives

    // mu(Q) = 1 for this instance; gamma far below makes the faithful
    // parameters halt on the spot with a clean certificate.
    let cert = dir.join("cert.json");
    let report_path = dir.join("report.json");
    let out = bin()
        .args(["solve", "--input"])
        .arg(&cond)
        .args(["--gamma", "0.01", "--oracle"])
        .arg("--cert-out")
        .arg(&cert)
        .arg("--output")
        .arg(&report_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["decision"], "accept");
    assert_eq!(report["certificate"]["verified"], true);
    assert_eq!(report["oracle"]["promise_ok"], true);

    let out = bin()
        .args(["verify", "--cert"])
        .arg(&cert)
        .arg("--instance")
        .arg(&cond)
        .output()
        .unwrap();
    // The certificate was produced at an overridden gamma, not the
    // instance's own; pairing must be rejected as a usage error.
    assert_eq!(code(&out), 2);
}

#[test]
fn solve_raw_q_and_reverify_certificate() {
    let dir = workdir("rawq");
    let inst = dir.join("q.json");
    fs::write(&inst, raw_identity_instance(0.25, 0.3, 1.0 / 12.0)).unwrap();
    let cert = dir.join("cert.json");

    let out = bin()
        .args(["solve", "--input"])
        .arg(&inst)
        .arg("--cert-out")
        .arg(&cert)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["decision"], "accept");
    assert_eq!(report["iterations"], 1);
    assert_eq!(report["certificate"]["kind"], "primal");
    assert_eq!(report["certificate"]["verified"], true);

    let out = bin()
        .args(["verify", "--cert"])
        .arg(&cert)
        .arg("--instance")
        .arg(&inst)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let verdict = stdout_json(&out);
    assert_eq!(verdict["pass"], true);
}

#[test]
fn tampered_certificate_fails_with_named_constraint() {
    let dir = workdir("tamper");
    let inst = dir.join("q.json");
    fs::write(&inst, raw_identity_instance(0.25, 0.3, 1.0 / 12.0)).unwrap();
    let cert = dir.join("cert.json");
    let out = bin()
        .args(["solve", "--input"])
        .arg(&inst)
        .arg("--cert-out")
        .arg(&cert)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);

    let mut parsed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    let entry = &mut parsed["matrix"][0][1][0];
    *entry = serde_json::json!(entry.as_f64().unwrap() + 0.1);
    fs::write(&cert, serde_json::to_string(&parsed).unwrap()).unwrap();

    let out = bin()
        .args(["verify", "--cert"])
        .arg(&cert)
        .arg("--instance")
        .arg(&inst)
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    let verdict = stdout_json(&out);
    assert_eq!(verdict["pass"], false);
    let failed: Vec<String> = verdict["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect();
    assert!(failed.contains(&"hermitian".to_string()), "failed checks: {failed:?}");
}

#[test]
fn wrong_instance_pairing_is_usage_error() {
    let dir = workdir("pairing");
    let inst = dir.join("q.json");
    fs::write(&inst, raw_identity_instance(0.25, 0.3, 1.0 / 12.0)).unwrap();
    let cert = dir.join("cert.json");
    let out = bin()
        .args(["solve", "--input"])
        .arg(&inst)
        .arg("--cert-out")
        .arg(&cert)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);

    // Same operator, different threshold: the certificate must not verify
    // against it.
    let other = dir.join("other.json");
    fs::write(&other, raw_identity_instance(0.25, 0.4, 1.0 / 12.0)).unwrap();
    let out = bin()
        .args(["verify", "--cert"])
        .arg(&cert)
        .arg("--instance")
        .arg(&other)
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_json_is_usage_error() {
    let dir = workdir("badjson");
    let inst = dir.join("broken.json");
    fs::write(&inst, "{ not json").unwrap();
    let out = bin().args(["condition", "--input"]).arg(&inst).output().unwrap();
    assert_eq!(code(&out), 2);
    let out = bin().args(["solve", "--input"]).arg(&inst).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn out_of_promise_flag_exits_one() {
    let dir = workdir("promise");
    let inst = dir.join("q.json");
    // mu = 0.5, gamma = 0.48: closer than 4 eps gamma.
    fs::write(&inst, raw_identity_instance(0.25, 0.48, 1.0 / 12.0)).unwrap();
    let out = bin()
        .args(["solve", "--input"])
        .arg(&inst)
        .args(["--params-override", "0.05,2000", "--oracle"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    let report = stdout_json(&out);
    assert_eq!(report["oracle"]["promise_ok"], false);
    assert_eq!(report["certificate"]["verified"], true);
}

#[test]
fn reports_are_deterministic_modulo_timings() {
    let dir = workdir("determinism");
    let inst = dir.join("q.json");
    fs::write(&inst, raw_identity_instance(0.25, 0.8, 1.0 / 12.0)).unwrap();
    let run = || {
        let out = bin()
            .args(["solve", "--input"])
            .arg(&inst)
            .args(["--params-override", "0.000868,200", "--oracle", "--seed", "99"])
            .output()
            .unwrap();
        let mut v = stdout_json(&out);
        v.as_object_mut().unwrap().remove("timings");
        serde_json::to_string(&v).unwrap()
    };
    let first = run();
    let second = run();
    assert_eq!(first, second);
}

#[test]
fn trace_csv_has_schema() {
    let dir = workdir("trace");
    let inst = dir.join("q.json");
    fs::write(&inst, raw_identity_instance(0.25, 0.8, 1.0 / 12.0)).unwrap();
    let trace = dir.join("trace.csv");
    let out = bin()
        .args(["solve", "--input"])
        .arg(&inst)
        .args(["--params-override", "0.000868,50"])
        .arg("--trace")
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,s,trace_w,pairing");
    let first = lines.next().unwrap();
    assert_eq!(first.split(',').count(), 4);
    assert!(first.starts_with("0,"));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn oracle_subcommand_closed_form() {
    let dir = workdir("oracle");
    let inst = dir.join("q.json");
    fs::write(&inst, raw_identity_instance(0.25, 0.5, 1.0 / 12.0)).unwrap();
    let out = bin().args(["oracle", "--input"]).arg(&inst).output().unwrap();
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!((v["lower"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert!((v["upper"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert_eq!(v["converged"], true);
    assert!(v["choi_witness"].is_array());
}

#[test]
fn amplify_subcommand() {
    let out = bin()
        .args(["amplify", "--r", "2", "--q", "3", "--a", "0.6666666666666666", "--b", "0.3333333333333333", "--trials", "50"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["params"]["s"], 12);
    assert_eq!(v["params"]["t"], 1728);
    assert_eq!(v["simulation"]["failures"], 0);

    // Gap precondition violation is a usage error.
    let out = bin()
        .args(["amplify", "--r", "2", "--q", "3", "--a", "0.5", "--b", "0.4"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

use std::path::PathBuf;
use std::process::{Command, Output, Stdio};
use std::io::Write;

use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(name: &str) -> String {
    fixtures().join(name).to_string_lossy().into_owned()
}

fn citensor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_citensor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn citensor_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_citensor"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout))
    })
}

#[test]
fn dim_prints_integer() {
    let o = citensor(&["dim", "--n", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "12\n");
    let full = citensor(&["dim", "--n", "3", "--full"]);
    assert_eq!(String::from_utf8(full.stdout).unwrap(), "6\n");
}

#[test]
fn validate_names_the_broken_condition() {
    let o = citensor(&["validate", "--in", &fixture("bad_pair12.json")]);
    assert_eq!(o.status.code(), Some(1));
    let v = json_out(&o);
    assert_eq!(v["reason"]["condition"], "pair12");
    assert_eq!(v["reason"]["worst_index"], serde_json::json!([1, 2, 1, 1]));
    assert_eq!(v["valid"], false);

    let ok = citensor(&["validate", "--in", &fixture("counterexample_n3.json")]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json_out(&ok)["valid"], true);
}

#[test]
fn validate_reports_psd_failure() {
    let text = std::fs::read_to_string(fixture("basis_n2.json")).unwrap();
    let arr: Value = serde_json::from_str(&text).unwrap();
    let mut neg = arr[0].clone();
    let entries: Vec<f64> = neg["entries"].as_array().unwrap().iter().map(|v| -v.as_f64().unwrap()).collect();
    neg["entries"] = serde_json::json!(entries);
    let o = citensor_stdin(&["validate"], &neg.to_string());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json_out(&o)["reason"]["condition"], "psd");
}

#[test]
fn is_simple_refutes_counterexample() {
    let o = citensor(&["is-simple", "--in", &fixture("counterexample_n3.json")]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    assert_eq!(v["verdict"], "not_simple");
    assert_eq!(v["witness"], serde_json::json!([1, 1, 2, 3]));
}

#[test]
fn is_simple_accepts_a_basis_element() {
    let text = std::fs::read_to_string(fixture("psd_basis_n3.json")).unwrap();
    let arr: Value = serde_json::from_str(&text).unwrap();
    let o = citensor_stdin(&["is-simple"], &arr[3].to_string());
    let v = json_out(&o);
    assert_eq!(v["verdict"], "simple");
    assert_eq!(v["weight"], 1.0);
}

#[test]
fn psd_basis_elements_decompose_to_one_component() {
    let o = citensor(&["basis", "--n", "3", "--psd"]);
    assert_eq!(o.status.code(), Some(0));
    let arr = json_out(&o);
    let arr = arr.as_array().unwrap();
    assert_eq!(arr.len(), 4);
    for el in arr {
        let d = citensor_stdin(&["decompose"], &el.to_string());
        assert_eq!(d.status.code(), Some(0));
        let v = json_out(&d);
        let comps = v["components"].as_array().unwrap();
        assert_eq!(comps.len(), 1, "{el}");
        assert!((comps[0]["weight"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn shipped_basis_files_match_fresh_output() {
    let dir = tempfile::tempdir().unwrap();
    for n in ["2", "3", "4"] {
        for (psd, name) in [(false, format!("basis_n{n}.json")), (true, format!("psd_basis_n{n}.json"))] {
            let out = dir.path().join(&name);
            let mut args = vec!["basis", "--n", n, "--out", out.to_str().unwrap(), "--quiet"];
            if psd {
                args.push("--psd");
            }
            assert_eq!(citensor(&args).status.code(), Some(0));
            assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(fixtures().join(&name)).unwrap(), "{name}");
        }
    }
}

#[test]
fn decompose_rejects_tensor_outside_v3() {
    let o = citensor(&["decompose", "--in", &fixture("bad_pair12.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json_out(&o)["error"], "not_in_v3");
}

#[test]
fn usage_errors_exit_2() {
    let o = citensor(&["dim", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    assert_eq!(citensor(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn unreadable_input_exits_1_with_json_reason() {
    let o = citensor(&["validate", "--in", "/nonexistent/tensor.json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "input");
}

#[test]
fn properties_is_deterministic_and_passes_for_fixture() {
    let spec = fixture("systems/rigid_body_casimir.json");
    let args = ["properties", "--spec", spec.as_str(), "--probes", "100", "--seed", "7"];
    let a = citensor(&args);
    let b = citensor(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json_out(&a)["passes"], true);
}

#[test]
fn properties_flags_sign_flipped_tensor() {
    let text = std::fs::read_to_string(fixture("systems/rigid_body_casimir.json")).unwrap();
    let mut spec: Value = serde_json::from_str(&text).unwrap();
    spec["tensor"]["weight"] = serde_json::json!(-1.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flipped.json");
    std::fs::write(&path, spec.to_string()).unwrap();
    let o = citensor(&["properties", "--spec", path.to_str().unwrap(), "--probes", "100"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(json_out(&o)["axioms"]["min_entropy_production"].as_f64().unwrap() < -1e-12);
    // registration refuses to simulate it
    let sim = citensor(&["simulate", "--spec", path.to_str().unwrap(), "--t-end", "0.1", "--step", "0.01"]);
    assert_eq!(sim.status.code(), Some(1));
}

#[test]
fn simulate_then_diagnose() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let spec = fixture("systems/rigid_body_casimir.json");
    let o = citensor(&[
        "simulate", "--spec", &spec, "--step", "1e-2", "--t-end", "2", "--record-every", "10", "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json_out(&o);
    assert_eq!(summary["samples"], 21);
    let d = citensor(&["diagnose", "--in", csv.to_str().unwrap()]);
    assert_eq!(d.status.code(), Some(0));
    let report = json_out(&d);
    assert_eq!(report, summary);
    assert!(report["max_h_drift"].as_f64().unwrap() < 1e-8);
    assert!(report["min_entropy_rate"].as_f64().unwrap() >= -1e-12);

    let table = citensor(&["diagnose", "--in", csv.to_str().unwrap(), "--csv"]);
    let text = String::from_utf8(table.stdout).unwrap();
    assert!(text.starts_with("key,value\n"));
    assert!(text.contains("\nsamples,21\n"));
}

#[test]
fn simulate_to_stdout_writes_csv() {
    let spec = fixture("systems/oscillator.json");
    let o = citensor(&["simulate", "--spec", &spec, "--x0", "1,0", "--step", "0.1", "--t-end", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x_1,x_2,h,s,entropy_rate,sh_bracket"));
    assert_eq!(lines.count(), 11);
}

#[test]
fn weak_fixture_simulates() {
    let spec = fixture("systems/rigid_body_weak.json");
    let o = citensor(&["simulate", "--spec", &spec, "--step", "1e-2", "--t-end", "1", "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_is_ordered_and_deterministic() {
    let spec = fixture("systems/rigid_body_casimir.json");
    let args = [
        "sweep", "--spec", spec.as_str(), "--x0", "1,0.5,0.2", "--x0", "0.3,-1,0.4", "--x0", "0,0,0", "--step", "0.05",
        "--t-end", "1",
    ];
    let a = citensor(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, citensor(&args).stdout);
    let rows = json_out(&a);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1]["x0"], serde_json::json!([0.3, -1.0, 0.4]));
    assert_eq!(rows[2]["max_h_drift"], 0.0);
}

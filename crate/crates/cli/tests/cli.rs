//! End-to-end tests of the compiled binary: exit-code contract, report
//! schemas, CSV emission, config handling, and byte-stability.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qanomaly"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("qanomaly_test_{}_{name}", std::process::id()));
    p
}

#[test]
fn starcheck_default_passes() {
    let out = run(&["starcheck"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["report_version"], 1);
    assert_eq!(v["pass"], true);
    assert!(v["d1_compatibility"]["max_residual"].as_f64().unwrap() < 1e-10);
    assert!(v["associativity"]["max_residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["config"]["scheme"], "wick");
}

#[test]
fn starcheck_weyl_reports_symmetry_check() {
    let out = run(&["starcheck", "--scheme=weyl"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert!(v["weyl_even_order_symmetry"]["max_residual"].as_f64().unwrap() < 1e-10);
    assert!(v["wick_kernel_residual"].is_null());
}

#[test]
fn starcheck_zero_alpha_is_validation_error() {
    let out = run(&["starcheck", "--alpha=0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}

#[test]
fn certify_fixture_both_anomalous() {
    let out = run(&["certify", "--degree_cap=4"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let obs = v["observables"].as_array().unwrap();
    assert_eq!(obs.len(), 2);
    for o in obs {
        assert_eq!(o["verdict"], "Anomalous");
        assert_eq!(o["report_version"], 1);
        assert!(o["polynomial_solve"]["residual"].as_f64().unwrap() > 1e-4);
        assert_eq!(o["tori"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn certify_asymmetric_splits_verdicts() {
    let out = run(&["certify", "--degree_cap=4", "--beta=1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let obs = v["observables"].as_array().unwrap();
    assert_eq!(obs[0]["observable"], "s1");
    assert_eq!(obs[0]["verdict"], "Anomalous");
    assert_eq!(obs[1]["observable"], "s2");
    assert_eq!(obs[1]["verdict"], "NotObstructedAtOrder1");
    // The exhibited correction is recorded with its defect.
    assert_eq!(obs[1]["polynomial_solve"]["f1"], "0");
    assert!(obs[1]["polynomial_solve"]["defect"].as_f64().unwrap() < 1e-8);
}

#[test]
fn certify_unperturbed_is_inconclusive_exit_3() {
    let out = run(&["certify", "--degree_cap=2", "--a=0", "--b=0", "--c=0"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json_of(&out);
    assert_eq!(v["resonant_tori"], 0);
    for o in v["observables"].as_array().unwrap() {
        assert_eq!(o["verdict"], "Inconclusive");
    }
}

#[test]
fn certify_expect_flag_controls_exit() {
    let ok = run(&["certify", "--degree_cap=3", "--observable=s1", "--expect=Anomalous"]);
    assert_eq!(ok.status.code(), Some(0));
    let miss = run(&[
        "certify",
        "--degree_cap=3",
        "--observable=s1",
        "--expect=NotObstructedAtOrder1",
    ]);
    assert_eq!(miss.status.code(), Some(1));
    // Inconclusive geometry can still be the expected outcome.
    let inconclusive = run(&[
        "certify",
        "--degree_cap=2",
        "--a=0",
        "--b=0",
        "--c=0",
        "--expect=Inconclusive",
    ]);
    assert_eq!(inconclusive.status.code(), Some(0));
}

#[test]
fn certify_weyl_not_obstructed() {
    let out = run(&["certify", "--degree_cap=4", "--scheme=weyl", "--observable=s1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let o = &v["observables"][0];
    assert_eq!(o["verdict"], "NotObstructedAtOrder1");
    assert_eq!(o["density"], "0");
    assert_eq!(o["polynomial_solve"]["rhs_norm"], 0.0);
}

#[test]
fn certify_orbit_csv_files() {
    let base = tmp_path("orbits");
    let base_str = base.to_str().unwrap();
    let out = run(&[
        "certify",
        "--degree_cap=2",
        "--observable=s1",
        "--orbit_steps=200",
        "--orbit-csv",
        base_str,
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for tag in ["omega1_zero", "omega2_zero"] {
        let path = format!("{base_str}.{tag}.csv");
        let text = std::fs::read_to_string(&path).expect("orbit csv exists");
        assert!(text.starts_with("t,x1,p1,x2,p2\n"));
        assert_eq!(text.lines().count(), 202); // header + steps + endpoint
        std::fs::remove_file(path).ok();
    }
}

#[test]
fn fomenko_fixture_graph_and_csvs() {
    let json_path = tmp_path("fomenko.json");
    let csv_base = tmp_path("fomenko");
    let out = run(&[
        "fomenko",
        "--integral=s2",
        "--samples=64",
        "--out",
        json_path.to_str().unwrap(),
        "--csv",
        csv_base.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let verts = v["graph"]["vertices"].as_array().unwrap();
    let blacks = verts.iter().filter(|x| x["kind"] == "black").count();
    let whites = verts.iter().filter(|x| x["kind"] == "white").count();
    assert_eq!((blacks, whites), (2, 1));
    assert_eq!(v["graph"]["edges"].as_array().unwrap().len(), 2);
    assert!(v["min_grad_h_on_arc"].as_f64().unwrap() > 0.0);
    let ellipse = std::fs::read_to_string(format!("{}.ellipse.csv", csv_base.display())).unwrap();
    assert_eq!(ellipse.lines().count(), 65); // header + samples rows
    std::fs::remove_file(&json_path).ok();
    for tag in ["ellipse", "omega1_zero", "omega2_zero"] {
        std::fs::remove_file(format!("{}.{tag}.csv", csv_base.display())).ok();
    }
}

#[test]
fn fomenko_unperturbed_is_a_segment() {
    let out = run(&["fomenko", "--integral=s1", "--a=0", "--b=0", "--c=0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let verts = v["graph"]["vertices"].as_array().unwrap();
    assert_eq!(verts.len(), 2);
    assert!(verts.iter().all(|x| x["kind"] == "black"));
    assert_eq!(v["graph"]["edges"].as_array().unwrap().len(), 1);
    assert_eq!(v["graph"]["edges"][0]["integral_range"], serde_json::json!([0.0, 1.0]));
}

#[test]
fn fomenko_requires_integral_flag() {
    let out = run(&["fomenko"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scan_alpha_sweep_matches_expected_verdicts() {
    let out = run(&[
        "scan",
        "--degree_cap=4",
        "--observable=s1",
        "--sweep",
        "alpha=0.5,1,2",
        "--sweep",
        "beta=1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let points = v["points"].as_array().unwrap();
    assert_eq!(points.len(), 3);
    let verdicts: Vec<&str> = points
        .iter()
        .map(|p| p["observables"][0]["verdict"].as_str().unwrap())
        .collect();
    assert_eq!(verdicts, ["Anomalous", "NotObstructedAtOrder1", "Anomalous"]);
}

#[test]
fn scan_without_sweeps_is_empty() {
    let out = run(&["scan"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["points"].as_array().unwrap().len(), 0);
}

#[test]
fn scan_records_per_point_validation_errors() {
    let out = run(&["scan", "--degree_cap=2", "--sweep", "c=0.5,1.2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let points = v["points"].as_array().unwrap();
    assert_eq!(points.len(), 2);
    assert!(points[0]["error"].is_null());
    assert!(points[1]["error"].as_str().unwrap().contains("positive definite"));
}

#[test]
fn config_file_and_override_precedence() {
    let cfg_path = tmp_path("config.txt");
    std::fs::write(&cfg_path, "# test config\nalpha = 0.5\nscheme = wick\ndegree_cap = 2\n")
        .unwrap();
    let out = run(&[
        "starcheck",
        "--config",
        cfg_path.to_str().unwrap(),
        "--alpha=2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["config"]["alpha"], 2.0);
    assert_eq!(v["config"]["degree_cap"], 2);
    std::fs::remove_file(&cfg_path).ok();
}

#[test]
fn unknown_config_key_is_rejected_with_line() {
    let cfg_path = tmp_path("bad_config.txt");
    std::fs::write(&cfg_path, "alpha = 2\nnot_a_key = 1\n").unwrap();
    let out = run(&["starcheck", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "stderr: {err}");
    assert!(err.contains("not_a_key"));
    std::fs::remove_file(&cfg_path).ok();
}

#[test]
fn reports_are_byte_stable() {
    let a = run(&["certify", "--degree_cap=3", "--seed=7"]);
    let b = run(&["certify", "--degree_cap=3", "--seed=7"]);
    assert_eq!(a.status.code(), b.status.code());
    assert_eq!(a.stdout, b.stdout, "same config and seed must give identical bytes");
    let c = run(&["scan", "--degree_cap=2", "--sweep", "alpha=0.5,2", "--seed=7"]);
    let d = run(&["scan", "--degree_cap=2", "--sweep", "alpha=0.5,2", "--seed=7"]);
    assert_eq!(c.stdout, d.stdout);
}

use std::fs;
use std::process::{Command, Output};

use qrac::mub::{galois_mubs, load_bases};
use serde_json::Value;

fn qrac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrac")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn mub_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m5.json");
    let out = qrac(&["mub", "--dim", "5", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("max unbiasedness deviation"));
    let loaded = load_bases(&path).unwrap();
    let built = galois_mubs(5).unwrap();
    assert_eq!(loaded.len(), 6);
    for (a, b) in loaded.iter().zip(built.bases()) {
        assert_eq!(a.matrix(), b.matrix());
    }
}

#[test]
fn non_prime_power_is_a_usage_error() {
    let out = qrac(&["mub", "--dim", "6"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("not a prime power"));
}

#[test]
fn both_methods_agree_on_the_larger_class() {
    let v = json(&qrac(&["qrac", "--dim", "5", "--n", "3", "--subset", "0,1,2", "--method", "both"]));
    let (e, a) = (v["eig"].as_f64().unwrap(), v["analytic"].as_f64().unwrap());
    assert!((e - a).abs() <= 1e-10);
    assert_eq!(format!("{e:.4}"), "0.6109");
}

#[test]
fn pair_and_single_basis_values() {
    let v = json(&qrac(&["qrac", "--dim", "11", "--n", "2", "--subset", "3,7"]));
    let expected = 0.5 * (1.0 + 1.0 / 11f64.sqrt());
    assert!((v["eig"].as_f64().unwrap() - expected).abs() < 1e-12);
    let out = qrac(&["qrac", "--dim", "11", "--n", "1", "--subset", "4"]);
    assert_eq!(json(&out)["eig"].as_f64(), Some(1.0));
    assert!(stderr(&out).contains("1.00000000000"));
}

#[test]
fn weights_and_bases_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m4.json");
    assert!(qrac(&["mub", "--dim", "4", "--out", path.to_str().unwrap()]).status.success());
    let v = json(&qrac(&["qrac", "--bases", path.to_str().unwrap(), "--n", "2", "--subset", "0,1", "--weights", "0.5,0.5"]));
    assert!((v["eig"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    let bad = qrac(&["qrac", "--dim", "4", "--n", "2", "--weights", "0.7,0.7"]);
    assert_eq!(bad.status.code(), Some(2));
    let analytic_n2 = qrac(&["qrac", "--dim", "4", "--n", "2", "--method", "analytic"]);
    assert_eq!(analytic_n2.status.code(), Some(2));
}

#[test]
fn budget_exit_code() {
    let out = qrac(&["qrac", "--dim", "11", "--n", "8"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn oi_scan_pattern() {
    for (d, n) in [("13", 2), ("7", 1), ("9", 2)] {
        let v = json(&qrac(&["oi-scan", "--dim", d]));
        assert_eq!(v["N"], n, "d={d}");
        assert_eq!(v["agrees"], true);
    }
    let csv = qrac(&["oi-scan", "--dim", "5", "--format", "csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("mu1,mu2,mu3,P\n"));
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn perturb_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &str| {
        vec!["perturb", "--dim", "5", "--delta-end", "0.1", "--delta-step", "0.05", "--format", "csv", "--out", p]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()
    };
    for p in [&a, &b] {
        let argv = args(p.to_str().unwrap());
        let out = Command::new(env!("CARGO_BIN_EXE_qrac")).args(&argv).output().unwrap();
        assert!(out.status.success());
        assert!(stderr(&out).contains("surpass=false"));
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    assert!(String::from_utf8(text).unwrap().starts_with("triplet,delta,P\n0-1-2,"));
    let v = json(&qrac(&["perturb", "--dim", "4", "--delta-end", "0.04", "--subset", "0,1,2", "--subset", "1,2,3"]));
    assert_eq!(v["curves"].as_array().unwrap().len(), 2);
}

#[test]
fn shots_require_seed_and_two_trials() {
    assert_eq!(qrac(&["shots", "--dim", "5"]).status.code(), Some(2));
    assert_eq!(qrac(&["shots", "--dim", "5", "--seed", "1", "--trials", "1"]).status.code(), Some(2));
}

#[test]
fn infinite_shots_give_exact_values() {
    let v = json(&qrac(&["shots", "--dim", "5", "--seed", "7", "--infinite"]));
    let scenarios = v["scenarios"].as_array().unwrap();
    assert_eq!(scenarios.len(), 2);
    for s in scenarios {
        assert!((s["mean"].as_f64().unwrap() - s["exact"].as_f64().unwrap()).abs() <= 1e-12);
    }
    assert_eq!(v["generator"], "ChaCha20 (rand_chacha 0.9)");
    let again = qrac(&["shots", "--dim", "3", "--seed", "7", "--shots", "500", "--trials", "3"]);
    let once = qrac(&["shots", "--dim", "3", "--seed", "7", "--shots", "500", "--trials", "3"]);
    assert_eq!(again.stdout, once.stdout);
}

#[test]
fn verify_prints_reference_values() {
    let out = qrac(&["verify", "--dim", "5", "--word", "0,0,1"]);
    let text = stderr(&out);
    assert!(text.contains("Phi     = 1.2566"), "{text}");
    assert!(text.contains("gamma0  = 2.6342"));
    let v = json(&out);
    assert!(v["gradient_norms"].as_array().unwrap().iter().all(|g| g.as_f64().unwrap() <= 1e-6));
    assert!(v["grid_max"].as_f64().unwrap() <= v["q_m1"].as_f64().unwrap() + 1e-9);
}

#[test]
fn missing_output_directory_fails_early() {
    let out = qrac(&["oi-scan", "--dim", "5", "--out", "/nonexistent/dir/x.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("does not exist"));
}

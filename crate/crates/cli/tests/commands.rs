//! The `ncfree` binary end to end: documented examples, artifacts, reruns and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ncfree_core::{NcPoly, NcTensor};
use serde_json::Value;

fn ncfree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncfree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn derive_example_is_z1_tensor_z1() {
    let out = ncfree(&["derive", "--n", "2", "--j", "2", "x1 x2 x1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["schema"], "ncfree.derivative.v1");
    let t: NcTensor = serde_json::from_value(v["derivatives"][0]["tensor"].clone()).unwrap();
    let z1 = NcPoly::var(2, 1).unwrap();
    assert_eq!(t, NcTensor::elementary(&z1, &z1).unwrap());
}

#[test]
fn derive_without_j_lists_every_generator() {
    let v = json(&ncfree(&["derive", "x1 x2 + x2 x1"]));
    let texts: Vec<&str> = v["derivatives"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["text"].as_str().unwrap())
        .collect();
    assert_eq!(texts.len(), 2);
    assert!(texts.iter().all(|t| t.contains('⊗')));
}

#[test]
fn conjugate_check_example_has_zero_residual() {
    let out = ncfree(&["conjugate-check", "--family", "semicircular", "--variance", "1", "--degree", "6"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["max_residual"], 0.0);
    assert_eq!(v["pass"], true);
    assert_eq!(v["schema"], "ncfree.conjugate_check.v1");
}

#[test]
fn conjugate_check_fails_with_exit_1_for_a_wrong_system() {
    // ξ = 2Z is not conjugate to a variance-1 semicircular.
    let out = ncfree(&["conjugate-check", "--xi", "2 x1", "--degree", "4"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["pass"], false);
    // On GUE matrices the semicircular system is only approximate.
    assert_eq!(code(&ncfree(&["conjugate-check", "--family", "gue", "--N", "40", "--degree", "3"])), 1);
}

#[test]
fn atoms_example_writes_three_histograms_and_a_trend() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = ncfree(&["atoms", "--poly", "x1 x2 + x2 x1", "--N", "200,400,800", "--h", "0.05", "--seed", "7", "--out", d]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for n in [200, 400, 800] {
        let csv = fs::read_to_string(dir.path().join(format!("hist_N{n}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("bin_left,bin_right,mass"));
        let total: f64 = lines.map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
    let trend: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("atom_trend.json")).unwrap()).unwrap();
    assert_eq!(trend["schema"], "ncfree.atom_trend.v1");
    assert_eq!(trend["dims"], serde_json::json!([200, 400, 800]));
    assert_eq!(trend, json(&out));
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_produce_byte_identical_artifacts() {
    let runs: Vec<(Vec<&str>, bool)> = vec![
        (vec!["atoms", "--poly", "x1^2 + x2", "--N", "30,60", "--seed", "3"], true),
        (vec!["fisher-curve", "--n", "2", "--t-grid", "1e-3:10:8"], true),
        (vec!["probe", "x1 x2 - x2 x1", "--family", "degenerate", "--N", "20", "--seed", "5"], false),
        (vec!["moments", "--n", "2", "--degree", "4"], false),
        (vec!["entropy", "--variance", "4", "--t-grid", "1e-4:1:10"], false),
    ];
    for (args, is_dir) in runs {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let target = |d: &Path| if is_dir { d.to_path_buf() } else { d.join("out.json") };
        let (ta, tb) = (target(a.path()), target(b.path()));
        for t in [&ta, &tb] {
            let mut full = args.clone();
            full.extend(["--out", t.to_str().unwrap()]);
            let out = ncfree(&full);
            assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        }
        let (fa, fb) = (dir_bytes(a.path()), dir_bytes(b.path()));
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{args:?}");
    }
}

#[test]
fn fisher_curve_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = ncfree(&["fisher-curve", "--n", "2", "--t-grid", "1e-4:1e2:30", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(dir.path().join("fisher_curve.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,phi_star,lower_bound,upper_bound"));
    assert_eq!(csv.lines().count(), 31);
    let summary = json(&out);
    assert_eq!(summary["schema"], "ncfree.fisher_summary.v1");
    let bounds: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fisher_bounds.json")).unwrap()).unwrap();
    assert_eq!(bounds["pass"], true);
    assert_eq!(bounds["upper_strict"], true);
}

#[test]
fn entropy_recovers_the_closed_form() {
    let v = json(&ncfree(&["entropy", "--n", "2", "--variance", "4"]));
    let chi = v["chi_star"]["value"].as_f64().unwrap();
    let closed = v["closed_form"].as_f64().unwrap();
    assert!((chi - closed).abs() < 1e-6, "{chi} vs {closed}");
    assert_eq!(v["upper_bound_respected"], true);
}

#[test]
fn extract_leading_and_probe_reports() {
    let out = ncfree(&["extract-leading", "(2+1i) x1 x2 x1 - 3 x2 + 1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["exact"], true);
    assert_eq!(v["schema"], "ncfree.extract_leading.v1");

    let v = json(&ncfree(&["probe", "x1 - x2", "--family", "degenerate", "--N", "16", "--seed", "1"]));
    assert_eq!(v["schema"], "ncfree.probe.v1");
    assert_eq!(v["dim_kernel"], 16);
    assert_eq!(v["dim_cokernel"], 16);
}

#[test]
fn moments_of_polynomials_and_words() {
    let v = json(&ncfree(&["moments", "(x1 x2 + x2 x1)^2", "x1 x2 x1 x2"]));
    assert_eq!(v["schema"], "ncfree.moments.v1");
    assert_eq!(v["moments"][0]["re"], 2.0);
    assert_eq!(v["moments"][1]["re"], 0.0);
    let v = json(&ncfree(&["moments", "--degree", "10"]));
    let catalan: Vec<f64> = v["moments"]
        .as_array()
        .unwrap()
        .iter()
        .step_by(2)
        .map(|m| m["re"].as_f64().unwrap())
        .collect();
    assert_eq!(catalan, vec![1.0, 1.0, 2.0, 5.0, 14.0, 42.0]);
}

#[test]
fn verify_small_sweep_passes() {
    let out = ncfree(&["verify", "--N", "24", "--seeds", "3", "--cases", "20"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["schema"], "ncfree.verify.v1");
    assert_eq!(v["sweeps"].as_array().unwrap().len(), 3);
    assert!(v["identities"]["failures"].as_array().unwrap().is_empty());
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# variance for the semicircular state\nvariance = 4\ndegree = 2\n").unwrap();
    let c = cfg.to_str().unwrap();
    let v = json(&ncfree(&["moments", "--config", c]));
    assert_eq!(v["oracle"]["variances"], serde_json::json!([4.0]));
    assert_eq!(v["moments"].as_array().unwrap().len(), 3);
    let v = json(&ncfree(&["moments", "--config", c, "--variance", "2"]));
    assert_eq!(v["oracle"]["variances"], serde_json::json!([2.0]));
}

#[test]
fn usage_and_parse_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &["derive", "x1 +"],
        &["derive", "x1 x3", "--n", "2"],
        &["derive", "x0"],
        &["derive", "x1", "--j", "3"],
        &["no-such-command"],
        &["moments", "--bogus"],
        &["atoms", "--poly", "x1 x2", "--N", "20,40"],
        &["fisher-curve", "--t-grid", "1,0.5"],
        &["moments", "--config", "/nonexistent/ncfree.cfg"],
        &["probe", "x1", "--N", "500"],
    ];
    for args in cases {
        let out = ncfree(args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(code(&ncfree(&["moments", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn help_exits_0() {
    let out = ncfree(&["fisher-curve", "--help"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("t,phi_star,lower_bound,upper_bound"));
}

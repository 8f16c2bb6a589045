//! End-to-end behaviour of the `blowup` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use blowup_cli::bundle::{read_float_csv, Bundle};
use blowup_cli::load_scenario;

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn blowup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blowup")).args(args).output().unwrap()
}

fn run_to(name: &str, out: &Path, extra: &[&str]) -> Output {
    let conf = scenarios().join(format!("{name}.conf"));
    let mut args = vec!["run", conf.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    blowup(&args)
}

#[test]
fn every_bundled_scenario_parses() {
    let mut n = 0;
    for entry in std::fs::read_dir(scenarios()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "conf") {
            load_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 8);
}

#[test]
fn run_then_check_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_to("random-smooth-N3", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let bundle = Bundle::read(dir.path()).unwrap();
    for f in ["checks.json", "manifest.json", "energy_trace.csv", "frame_integrals.csv", "trajectory_sup.csv"] {
        assert!(bundle.files.contains_key(f), "missing {f}");
    }
    let (header, rows) = read_float_csv(bundle.get("trajectory_sup.csv").unwrap()).unwrap();
    assert_eq!(header, vec!["t", "sup"]);
    assert!(!rows.is_empty());
    let manifest: serde_json::Value = serde_json::from_slice(bundle.get("manifest.json").unwrap()).unwrap();
    assert_eq!(manifest["complete"], serde_json::Value::Bool(true));

    let check = blowup(&["check", dir.path().to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(0), "{}", String::from_utf8_lossy(&check.stdout));
    assert!(String::from_utf8_lossy(&check.stdout).contains("dissipation_identity"));
}

#[test]
fn same_seed_gives_identical_bundles() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run_to("random-smooth-N3", a.path(), &["--seed", "5"]).status.code(), Some(0));
    assert_eq!(run_to("random-smooth-N3", b.path(), &["--seed", "5"]).status.code(), Some(0));
    assert_eq!(Bundle::read(a.path()).unwrap(), Bundle::read(b.path()).unwrap());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "name = bad\nm = 0.1\nq = 4\nforcing = power\nchecks = theorem_1_1\n").unwrap();
    let out = blowup(&["run", bad.to_str().unwrap(), "--out", dir.path().join("b").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("H_f"));

    std::fs::write(&bad, "name = bad\nbogus_key = 1\n").unwrap();
    assert_eq!(blowup(&["run", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(blowup(&["run", "/nonexistent/x.conf"]).status.code(), Some(2));
}

#[test]
fn checking_a_missing_bundle_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(blowup(&["check", dir.path().to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn tune_reports_zero_sigma_without_perturbation() {
    let conf = scenarios().join("unperturbed-critical-N2.conf");
    let out = blowup(&["tune", conf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["sigma"], serde_json::json!(0.0));
}

#[test]
fn list_checks_names_every_check() {
    let out = blowup(&["list-checks"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 14);
    assert!(text.contains("covering"));
}

//! End-to-end tests of the `qconvsim` binary: exit codes, schema
//! diagnostics, report shape, CSV output and run-to-run determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_qconvsim")
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .canonicalize()
        .unwrap()
}

fn run(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

#[test]
fn validate_accepts_shipped_scenarios() {
    for name in [
        "calibrated_b2b.json",
        "calibrated_12p4km.json",
        "ideal.json",
    ] {
        let path = scenarios_dir().join(name);
        let out = run(&["validate", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name} should validate");
    }
}

#[test]
fn validate_reports_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut doc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(scenarios_dir().join("calibrated_b2b.json")).unwrap(),
    )
    .unwrap();
    doc["source"]["mean_pairs_per_pulse"] = serde_json::json!(-0.5);
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();

    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("source.mean_pairs_per_pulse"),
        "diagnostic names the field: {stderr}"
    );
}

#[test]
fn validate_rejects_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("extra.json");
    let mut doc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(scenarios_dir().join("calibrated_b2b.json")).unwrap(),
    )
    .unwrap();
    doc["foo"] = serde_json::json!(42);
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();

    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("foo"));
}

#[test]
fn validate_missing_file_is_a_runtime_error() {
    let out = run(&["validate", "/nonexistent/scenario.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["run", "nonsense-kind", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_tomo_is_deterministic_for_fixed_seed() {
    let path = scenarios_dir().join("calibrated_b2b.json");
    let args = [
        "run",
        "tomo",
        path.to_str().unwrap(),
        "--seed",
        "7",
        "--pulses",
        "20000",
    ];
    let a = stdout_json(&run(&args));
    let b = stdout_json(&run(&args));
    assert_eq!(
        serde_json::to_string(&a["results"]).unwrap(),
        serde_json::to_string(&b["results"]).unwrap()
    );
    assert_eq!(a["seed"], serde_json::json!(7));
    // wall clock may differ; the results section must not
    let avg = a["results"]["average_fidelity"].as_f64().unwrap();
    assert!(avg > 0.9);
}

#[test]
fn run_fringe_writes_csv_rows_matching_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("fringe.csv");
    let path = scenarios_dir().join("ideal.json");
    let out = run(&[
        "run",
        "fringe",
        path.to_str().unwrap(),
        "--pulses",
        "200000",
        "--points",
        "13",
        "--fringe-csv",
        csv_path.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty(), "--quiet suppresses the report");

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "scan_value_rad,coincidences,stderr");
    assert_eq!(lines.len(), 1 + 13);
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 3);
        cols[0].parse::<f64>().unwrap();
        cols[1].parse::<u64>().unwrap();
        cols[2].parse::<f64>().unwrap();
    }
}

#[test]
fn run_qkd_reports_rate_fields() {
    let path = scenarios_dir().join("calibrated_b2b.json");
    let out = run(&[
        "run",
        "qkd",
        path.to_str().unwrap(),
        "--pulses",
        "200000000",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["experiment"], "qkd");
    assert!(report["results"]["qber"].is_f64());
    assert!(report["results"]["raw_key_rate_bps"].is_f64());
    assert!(report["results"]["z_basis"]["sifted_bits"].is_u64());
    assert!(report["scenario_hash"].is_string());
}

#[test]
fn run_convert_reports_per_state_traces() {
    let path = scenarios_dir().join("calibrated_b2b.json");
    let out = run(&["run", "convert", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    let states = report["results"]["states"].as_array().unwrap();
    assert_eq!(states.len(), 6);
    for s in states {
        assert!(s["aligned_trace"].as_f64().unwrap() > 0.9);
        assert!(s["windowed_fidelity"].as_f64().unwrap() > 0.9);
    }
}

fn write_counts(dir: &Path, 名: &str, body: serde_json::Value) -> PathBuf {
    let path = dir.join(名);
    std::fs::write(&path, serde_json::to_string(&body).unwrap()).unwrap();
    path
}

#[test]
fn tomo_standalone_reconstructs_exact_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_counts(
        dir.path(),
        "zero.json",
        serde_json::json!({
            "n_zero": 1000000, "n_one": 0,
            "n_plus": 500000, "n_minus": 500000,
            "n_plus_i": 500000, "n_minus_i": 500000,
            "total_z": 1000000, "total_x": 1000000, "total_y": 1000000,
            "target": "zero"
        }),
    );
    let out = run(&["tomo-standalone", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    let rho_00 = report["results"]["mle_density_re"][0][0].as_f64().unwrap();
    assert!(rho_00 > 0.999, "rho[0][0] = {rho_00}");
    assert!(report["results"]["linear_physical"].as_bool().unwrap());
    assert!(report["results"]["fidelity_vs_target"].as_f64().unwrap() > 0.999);
}

#[test]
fn tomo_standalone_flags_nonphysical_linear_inversion() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_counts(
        dir.path(),
        "nonphys.json",
        serde_json::json!({
            "n_zero": 100, "n_one": 0,
            "n_plus": 100, "n_minus": 0,
            "n_plus_i": 100, "n_minus_i": 0,
            "total_z": 100, "total_x": 100, "total_y": 100
        }),
    );
    let out = run(&["tomo-standalone", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert!(!report["results"]["linear_physical"].as_bool().unwrap());
    // the MLE reconstruction stays physical: diagonal entries in [0, 1]
    for k in 0..2 {
        let d = report["results"]["mle_density_re"][k][k].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&d));
    }
}

#[test]
fn tomo_standalone_rejects_incomplete_bases() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_counts(
        dir.path(),
        "missing_y.json",
        serde_json::json!({
            "n_zero": 100, "n_one": 0,
            "n_plus": 50, "n_minus": 50,
            "n_plus_i": 0, "n_minus_i": 0,
            "total_z": 100, "total_x": 100, "total_y": 0
        }),
    );
    let out = run(&["tomo-standalone", path.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.to_lowercase().contains("incomplete tomography"),
        "{stderr}"
    );
}

#[test]
fn tomo_standalone_rejects_inconsistent_totals() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_counts(
        dir.path(),
        "bad_totals.json",
        serde_json::json!({
            "n_zero": 100, "n_one": 0,
            "n_plus": 50, "n_minus": 50,
            "n_plus_i": 50, "n_minus_i": 50,
            "total_z": 90, "total_x": 100, "total_y": 100
        }),
    );
    let out = run(&["tomo-standalone", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("total_z"));
}

#[test]
fn scenario_hash_tracks_fields_not_formatting() {
    let dir = tempfile::tempdir().unwrap();
    let original = std::fs::read_to_string(scenarios_dir().join("calibrated_b2b.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&original).unwrap();

    // reformatting leaves the hash alone
    let pretty = dir.path().join("pretty.json");
    std::fs::write(&pretty, original).unwrap();
    let compact = dir.path().join("compact.json");
    std::fs::write(&compact, serde_json::to_string(&doc).unwrap()).unwrap();
    let h_orig = hash_of(&pretty);
    let h_compact = hash_of(&compact);
    assert_eq!(h_orig, h_compact);

    // any field change moves it
    let mut doc2 = doc.clone();
    doc2["pulses"] = serde_json::json!(123456);
    let edited = dir.path().join("edited.json");
    std::fs::write(&edited, serde_json::to_string(&doc2).unwrap()).unwrap();
    assert_ne!(h_orig, hash_of(&edited));
}

fn hash_of(path: &Path) -> String {
    let out = run(&[
        "run",
        "convert",
        path.to_str().unwrap(),
        "--quiet",
        "--out",
        path.with_extension("report.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path.with_extension("report.json")).unwrap())
            .unwrap();
    report["scenario_hash"].as_str().unwrap().to_string()
}

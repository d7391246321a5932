//! End-to-end checks of the binary: exit codes, produced files, warnings,
//! and run-to-run determinism, all inside temporary directories.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const CASE2_LENS_WINDOW_GBPS: (f64, f64) = (27.4, 41.2);
const CASE1_LENS_WINDOW_GBPS: (f64, f64) = (15.2, 18.6);
const NLOS_EXCESS_WINDOW_DB: (f64, f64) = (28.0, 31.0);

/// Outdoor preset shrunk to a smoke-test trial count.
fn small_outdoor_config() -> String {
    let full = include_str!("../../core/presets/outdoor_mu.toml");
    let small = full.replace("trials = 220", "trials = 12");
    assert_ne!(full, small, "preset no longer pins the trial count");
    small
}

fn lenssim(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lenssim"))
        .arg("--out")
        .arg(out_dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn json_in(dir: &Path, name: &str) -> serde_json::Value {
    let path = dir.join(name);
    let body = fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {name}: {e}"));
    serde_json::from_str(&body).unwrap_or_else(|e| panic!("parse {name}: {e}"))
}

#[test]
fn backhaul_preset_writes_all_budgets_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let out = lenssim(tmp.path(), &["backhaul", "--preset", "backhaul"]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    let case2 = json_in(tmp.path(), "backhaul_case2_lens.json");
    let gbps = case2["throughput_bps"].as_f64().unwrap() / 1e9;
    assert!(
        (CASE2_LENS_WINDOW_GBPS.0..=CASE2_LENS_WINDOW_GBPS.1).contains(&gbps),
        "clear-path lens throughput {gbps} Gbps"
    );
    let case1 = json_in(tmp.path(), "backhaul_case1_lens.json");
    let gbps = case1["throughput_bps"].as_f64().unwrap() / 1e9;
    assert!(
        (CASE1_LENS_WINDOW_GBPS.0..=CASE1_LENS_WINDOW_GBPS.1).contains(&gbps),
        "obstructed-path lens throughput {gbps} Gbps"
    );
    let excess = case1["excess_loss_db"].as_f64().unwrap();
    assert!(
        (NLOS_EXCESS_WINDOW_DB.0..=NLOS_EXCESS_WINDOW_DB.1).contains(&excess),
        "obstruction loss {excess} dB"
    );

    let manifest = json_in(tmp.path(), "manifest.json");
    assert_eq!(manifest["command"], "backhaul");
    assert_eq!(manifest["preset"], "backhaul");
    assert_eq!(manifest["seed"], 7, "omitted seed must fall back to the documented default");
    let outputs: Vec<&str> =
        manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(outputs.len(), 4, "two cases x two sides: {outputs:?}");
    for name in &outputs {
        assert!(tmp.path().join(name).exists(), "{name} listed but missing");
    }
}

#[test]
fn malformed_config_exits_with_config_code() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "not = [toml").unwrap();
    let out = lenssim(tmp.path(), &["backhaul", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
}

#[test]
fn unknown_config_key_exits_with_config_code() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("typo.toml");
    fs::write(&bad, "tx_power_dbm = 43.0\nbogus_knob = 1\n").unwrap();
    let out = lenssim(tmp.path(), &["backhaul", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains("bogus_knob"), "stderr should name the bad key");
}

#[test]
fn unknown_preset_exits_and_lists_shipped_names() {
    let tmp = TempDir::new().unwrap();
    let out = lenssim(tmp.path(), &["backhaul", "--preset", "no_such_thing"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("backhaul") && err.contains("outdoor_mu"), "stderr: {err}");
}

#[test]
fn pattern_rejects_out_of_range_port() {
    let tmp = TempDir::new().unwrap();
    let out = lenssim(tmp.path(), &["pattern", "--preset", "bare_block", "--port", "99"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
}

#[test]
fn pattern_writes_csv_and_metrics() {
    let tmp = TempDir::new().unwrap();
    let out = lenssim(tmp.path(), &["pattern", "--preset", "bare_block"]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let csv = fs::read_to_string(tmp.path().join("pattern.csv")).unwrap();
    assert!(csv.starts_with("theta_deg,phi_deg,gain_dbi\n"));
    let metrics = json_in(tmp.path(), "pattern_metrics.json");
    let peak = metrics["peak_gain_dbi"].as_f64().unwrap();
    assert!((peak - 14.5).abs() < 0.1, "bare block peak {peak} dBi");
    assert!(metrics["config_hash"].as_str().unwrap().len() > 8);
}

#[test]
fn steermap_on_non_steering_array_warns_but_succeeds() {
    let tmp = TempDir::new().unwrap();
    let out = lenssim(tmp.path(), &["steermap", "--preset", "bare_4x4"]);
    assert!(out.status.success(), "a degenerate map is a result, not an error");
    assert!(stderr_of(&out).contains("degenerate"), "stderr: {}", stderr_of(&out));
    let map = json_in(tmp.path(), "steermap.json");
    assert_eq!(map["degenerate"], true);
    assert_eq!(map["entries"].as_array().unwrap().len(), 16);
}

#[test]
fn mumimo_outdoor_reruns_byte_identically() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("small.toml");
    fs::write(&config, small_outdoor_config()).unwrap();
    let args = [
        "--seed",
        "7",
        "mumimo",
        "--config",
        config.to_str().unwrap(),
        "--scenario",
        "outdoor",
        "--beams",
        "8",
    ];
    let first = tmp.path().join("a");
    let second = tmp.path().join("b");
    for dir in [&first, &second] {
        let out = lenssim(dir, &args);
        assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    }
    for name in
        ["outdoor_lens_n8_h3.json", "outdoor_no_lens_n8_h3.json", "outdoor_lens_n8_h3.cdf.csv"]
    {
        let a = fs::read(first.join(name)).unwrap();
        let b = fs::read(second.join(name)).unwrap();
        assert!(a == b, "{name} differs between identical runs");
    }
}

#[test]
fn mumimo_indoor_rejects_beams_flag() {
    let tmp = TempDir::new().unwrap();
    let out = lenssim(
        tmp.path(),
        &["mumimo", "--preset", "indoor_mu", "--scenario", "indoor", "--beams", "8"],
    );
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
}

#[test]
fn linkbudget_meets_its_reference() {
    let tmp = TempDir::new().unwrap();
    let out = lenssim(tmp.path(), &["linkbudget"]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let report = json_in(tmp.path(), "linklevel.json");
    assert_eq!(report["exceeds_reference"], true);
    assert_eq!(report["qam64_ceiling_bps"].as_f64().unwrap(), 4.8e9);
}

#[test]
fn calibrate_reproduces_the_obstruction_loss_window() {
    let tmp = TempDir::new().unwrap();
    let out = lenssim(tmp.path(), &["calibrate"]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let report = json_in(tmp.path(), "calibration.json");
    let excess = report["nlos_excess_loss_db"].as_f64().unwrap();
    assert!(
        (NLOS_EXCESS_WINDOW_DB.0..=NLOS_EXCESS_WINDOW_DB.1).contains(&excess),
        "solved obstruction loss {excess} dB"
    );
}

#[test]
fn env_var_selects_output_directory() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lenssim"))
        .env("LENSSIM_OUT", tmp.path())
        .args(["backhaul", "--case", "2", "--lens"])
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(tmp.path().join("backhaul_case2_lens.json").exists());
    assert!(tmp.path().join("manifest.json").exists());
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sfic(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfic"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn simulate_series(dir: &Path) {
    write(
        dir,
        "sim.json",
        r#"{"truth":{"ar":[0.5],"sigma":1.0},"n":150,"seed":3}"#,
    );
    let out = sfic(dir, &["simulate", "--config", "sim.json", "--out", "sim"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

const FIC_CONFIG: &str = r#"{
  "input": "sim/series.csv",
  "candidates": [
    {"kind": "ar", "order": 0}, {"kind": "ar", "order": 1}, {"kind": "ar", "order": 2},
    {"kind": "ma", "order": 1}, {"kind": "np"}
  ],
  "foci": [{"name": "lag_corr", "k": 1}]
}"#;

#[test]
fn fic_happy_path() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    simulate_series(dir);
    write(dir, "fic.json", FIC_CONFIG);
    let out = sfic(dir, &["fic", "--config", "fic.json", "--out", "res"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("res/fic_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 5);
    assert_eq!(report["ranking"].as_array().unwrap().len(), 5);
    let csv = fs::read_to_string(dir.join("res/fic_report.csv")).unwrap();
    assert!(csv.starts_with("focus,candidate,metric,value\n"));
    let resolved = fs::read_to_string(dir.join("res/resolved_config.json")).unwrap();
    assert!(resolved.contains("\"quad_nodes\""));
    assert!(String::from_utf8_lossy(&out.stdout).contains("rank"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    simulate_series(dir);
    write(dir, "fic.json", FIC_CONFIG);
    sfic(dir, &["fic", "--config", "fic.json", "--out", "a"]);
    sfic(dir, &["fic", "--config", "fic.json", "--out", "a2"]);
    for f in ["fic_report.json", "fic_report.csv"] {
        assert_eq!(
            fs::read(dir.join("a").join(f)).unwrap(),
            fs::read(dir.join("a2").join(f)).unwrap()
        );
    }
}

#[test]
fn unknown_focus_exits_one() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(dir, "y.csv", "1\n2\n3\n");
    write(
        dir,
        "bad.json",
        r#"{"input":"y.csv","candidates":[{"kind":"np"}],"foci":[{"name":"spectral_quantile","p":0.5}]}"#,
    );
    let out = sfic(dir, &["fic", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["lag_cov", "lag_corr", "band_mass", "threshold_prob"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn unknown_config_key_exits_one() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "bad.json", r#"{"inputs":"y.csv"}"#);
    let out = sfic(tmp.path(), &["fic", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn constant_series_exits_two_with_report() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(dir, "c.csv", &"4.0\n".repeat(40));
    write(
        dir,
        "c.json",
        r#"{"input":"c.csv","candidates":[{"kind":"ar","order":1},{"kind":"np"}],"foci":[{"name":"lag_cov","k":1}]}"#,
    );
    let out = sfic(dir, &["fic", "--config", "c.json", "--out", "res"]);
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("res/fic_report.json")).unwrap())
            .unwrap();
    let np = report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["label"] == "NP")
        .unwrap();
    assert!(np["error"].as_str().unwrap().contains("degenerate"));
}

#[test]
fn bad_cell_reports_row() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(dir, "y.csv", "1\n2\n3\n4\nabc\n");
    write(
        dir,
        "f.json",
        r#"{"input":"y.csv","candidates":[{"kind":"np"}],"foci":[{"name":"lag_cov","k":0}]}"#,
    );
    let out = sfic(dir, &["fic", "--config", "f.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 5"));
}

#[test]
fn afic_with_detrending() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    simulate_series(dir);
    write(
        dir,
        "afic.json",
        r#"{"input":"sim/series.csv","detrend":{"kind":"linear_time"},
            "candidates":[{"kind":"ar","order":1},{"kind":"np"}],
            "foci":[{"name":"lag_cov","k":0},{"name":"lag_cov","k":1}],"weights":[1.0,3.0]}"#,
    );
    let out = sfic(dir, &["afic", "--config", "afic.json", "--out", "res"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("res/fic_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["criterion"], "afic");
    assert_eq!(report["foci"][1]["weight"], 0.75);
}

#[test]
fn mc_and_flag_overrides() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(
        dir,
        "mc.json",
        r#"{"truth":{"ar":[0.5],"sigma":1.0},"n":50,"B":1000,
            "candidates":[{"kind":"ar","order":0},{"kind":"ar","order":1},{"kind":"np"}],
            "foci":[{"name":"lag_cov","k":1}]}"#,
    );
    let out = sfic(
        dir,
        &[
            "mc",
            "--config",
            "mc.json",
            "--B",
            "6",
            "--seed",
            "9",
            "--workers",
            "1",
            "--out",
            "res",
        ],
    );
    assert!(out.status.code() == Some(0) || out.status.code() == Some(2));
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("res/mc_result.json")).unwrap()).unwrap();
    assert_eq!(result["replications"], 6);
    assert_eq!(result["seed"], 9);
    let resolved = fs::read_to_string(dir.join("res/resolved_config.json")).unwrap();
    assert!(resolved.contains("\"B\": 6"));
}

#[test]
fn least_false_table() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(
        dir,
        "lf.json",
        r#"{"truth":{"ar":[0.7,-0.6],"sigma":1.0},"candidates":[{"kind":"ar","order":1},{"kind":"ma","order":1}],"max_lag":4}"#,
    );
    let out = sfic(dir, &["least-false", "--config", "lf.json", "--out", "res"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.join("res/least_false.csv")).unwrap();
    assert!(csv.contains("C(4),MA(1),autocovariance"));
}

#[test]
fn reproduce_fig3_small() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let out = sfic(dir, &["reproduce", "fig3", "--B", "40", "--out", "res"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.join("res/fig3_relative_rmse.csv")).unwrap();
    let mut count = 0;
    for line in csv.lines().skip(1) {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
        count += 1;
    }
    assert_eq!(count, 30);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("res/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["replications"], 40);
}

#[test]
fn reproduce_fig1_small() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let out = sfic(dir, &["reproduce", "fig1", "--B", "10", "--out", "res"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let spectrum = fs::read_to_string(dir.join("res/fig1_spectrum.csv")).unwrap();
    assert!(spectrum.contains(",truth,density,") && spectrum.contains(",periodogram,density,"));
    let fic = fs::read_to_string(dir.join("res/fig1_fic.csv")).unwrap();
    assert_eq!(fic.matches(",_truth,mu_true,").count(), 3);
}

#[test]
fn reproduce_unknown_figure() {
    let tmp = TempDir::new().unwrap();
    let out = sfic(tmp.path(), &["reproduce", "fig2"]);
    assert_eq!(out.status.code(), Some(1));
}

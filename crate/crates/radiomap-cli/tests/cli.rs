//! End-to-end tests against the built binary.

use std::path::Path;
use std::process::{Command, Output};

fn radiomap(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radiomap"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(
        &path,
        r#"{"n_users": 6, "seed": 3, "iterations": 2,
            "mechanisms": ["sequential", "single-batch-eu"],
            "mechanism": {"mc_iterations": 20}}"#,
    )
    .unwrap();
    path
}

/// Drops the wall_ms column (measured time, not seed-determined).
fn stable_columns(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            cols[..cols.len().saturating_sub(1)].join(",")
        })
        .collect()
}

#[test]
fn tutorial_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = radiomap(&["tutorial"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("algebra checks passed"), "{text}");
    assert!(text.contains("residual"), "{text}");
}

#[test]
fn run_writes_versioned_outputs_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    for sub in ["a", "b"] {
        let out = radiomap(
            &["run", "--config", cfg.to_str().unwrap(), "--out", sub, "--parallel", "2"],
            dir.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read_to_string(dir.path().join("a/results.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b/results.csv")).unwrap();
    assert!(a.starts_with("# radiomap-results v1\n"));
    assert_eq!(stable_columns(&a), stable_columns(&b));
    // 2 iterations × 2 mechanisms + schema comment + column header
    assert_eq!(a.lines().count(), 6);

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["seed"], 3);
    assert_eq!(summary["config"]["n_users"], 6);
    assert_eq!(summary["mechanisms"].as_array().unwrap().len(), 2);
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    for (sub, seed) in [("a", "3"), ("b", "4")] {
        let out = radiomap(
            &["run", "--config", cfg.to_str().unwrap(), "--out", sub, "--seed", seed],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let a = std::fs::read_to_string(dir.path().join("a/results.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b/results.csv")).unwrap();
    assert_ne!(stable_columns(&a), stable_columns(&b));
}

#[test]
fn missing_field_named_in_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, r#"{"seed": 1}"#).unwrap();
    let out = radiomap(&["run", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("n_users"), "{err}");
}

#[test]
fn unknown_config_field_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, r#"{"n_users": 5, "seed": 1, "bogus": true}"#).unwrap();
    let out = radiomap(&["run", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn sweep_single_value_matches_run_modulo_axis_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let run = radiomap(
        &["run", "--config", cfg.to_str().unwrap(), "--out", "run"],
        dir.path(),
    );
    assert!(run.status.success());
    let sweep = radiomap(
        &[
            "sweep", "--config", cfg.to_str().unwrap(), "--axis", "rho", "--values", "1.0",
            "--out", "sweep",
        ],
        dir.path(),
    );
    assert!(sweep.status.success(), "{}", String::from_utf8_lossy(&sweep.stderr));

    let run_rows = stable_columns(&std::fs::read_to_string(dir.path().join("run/results.csv")).unwrap());
    let sweep_csv = std::fs::read_to_string(dir.path().join("sweep/sweep.csv")).unwrap();
    assert!(sweep_csv.starts_with("# radiomap-sweep v1\n"));
    let stripped: Vec<String> = stable_columns(&sweep_csv)
        .iter()
        .skip(2)
        .map(|l| l.splitn(2, ',').nth(1).unwrap().to_string())
        .collect();
    assert_eq!(stripped, run_rows[2..].to_vec());
}

#[test]
fn map_without_measurements_reports_prior_variance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let meas = dir.path().join("empty.csv");
    std::fs::write(&meas, "").unwrap();
    let out = radiomap(
        &[
            "map", "--config", cfg.to_str().unwrap(), "--measurements", meas.to_str().unwrap(),
            "--out", "map",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("map/map.csv")).unwrap();
    assert!(csv.starts_with("# radiomap-map v1\n"));
    let mut grid_points = 0;
    for line in csv.lines().skip(2) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[2], "0", "zero-mean prior: {line}");
        let var: f64 = cols[3].parse().unwrap();
        assert!((var - 15.5).abs() < 1e-6, "prior variance: {line}");
        grid_points += 1;
    }
    // 6 km / 0.45 km → 13 points per side
    assert_eq!(grid_points, 169);
}

#[test]
fn map_conditions_on_measurements() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let meas = dir.path().join("meas.csv");
    std::fs::write(&meas, "# id,dbm\n0,-70\n2,-75\n").unwrap();
    let out = radiomap(
        &[
            "map", "--config", cfg.to_str().unwrap(), "--measurements", meas.to_str().unwrap(),
            "--out", "map",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("map/map.csv")).unwrap();
    for line in csv.lines().skip(2) {
        let cols: Vec<&str> = line.split(',').collect();
        let var: f64 = cols[3].parse().unwrap();
        assert!(var <= 15.5 + 1e-9, "conditioning must not raise variance: {line}");
    }
}

#[test]
fn map_unknown_user_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let meas = dir.path().join("meas.csv");
    std::fs::write(&meas, "42,-70\n").unwrap();
    let out = radiomap(
        &[
            "map", "--config", cfg.to_str().unwrap(), "--measurements", meas.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("42"));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = radiomap(&["selftest"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.matches("PASS").count(), 5, "{text}");
}

#[test]
fn zero_parallel_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = radiomap(
        &["run", "--config", cfg.to_str().unwrap(), "--parallel", "0"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

//! Result writers. CSV schemas are versioned in a header comment; the
//! JSON summary echoes the full resolved config.
//!
//! All columns except `wall_ms` are deterministic per seed; `wall_ms`
//! is measured wall-clock time.

use std::fmt::Write as _;
use std::path::Path;

use radiomap::config::ExperimentConfig;
use radiomap::scenario::{summarize, ComparisonRow, MechanismSummary};
use serde_json::json;

use crate::CliError;

pub const RESULTS_SCHEMA: &str = "# radiomap-results v1";
pub const SWEEP_SCHEMA: &str = "# radiomap-sweep v1";
pub const MAP_SCHEMA: &str = "# radiomap-map v1";
const COLUMNS: &str = "iteration,mechanism,utility,value,payment,batches,offers,gamma_star,wall_ms";

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

fn push_row(out: &mut String, prefix: &str, r: &ComparisonRow) {
    let gamma = r.gamma_star.map(|g| g.to_string()).unwrap_or_default();
    writeln!(
        out,
        "{prefix}{},{},{},{},{},{},{},{gamma},{}",
        r.iteration,
        r.mechanism.label(),
        r.utility,
        r.value,
        r.payment,
        r.batches,
        r.offers,
        r.wall_ms
    )
    .expect("string write");
}

pub fn write_results_csv(path: &Path, rows: &[ComparisonRow]) -> Result<(), CliError> {
    let mut out = format!("{RESULTS_SCHEMA}\n{COLUMNS}\n");
    for r in rows {
        push_row(&mut out, "", r);
    }
    write_file(path, &out)
}

pub fn write_sweep_csv(
    path: &Path,
    axis: &str,
    runs: &[(f64, Vec<ComparisonRow>)],
) -> Result<(), CliError> {
    let mut out = format!("{SWEEP_SCHEMA}\n{axis},{COLUMNS}\n");
    for (value, rows) in runs {
        let prefix = format!("{value},");
        for r in rows {
            push_row(&mut out, &prefix, r);
        }
    }
    write_file(path, &out)
}

fn summary_value(cfg: &ExperimentConfig, summaries: &[MechanismSummary]) -> serde_json::Value {
    json!({
        "artifact": "radiomap",
        "schema_version": 1,
        "seed": cfg.seed,
        "config": cfg,
        "mechanisms": summaries,
    })
}

pub fn write_summary_json(
    path: &Path,
    cfg: &ExperimentConfig,
    summaries: &[MechanismSummary],
) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&summary_value(cfg, summaries))
        .map_err(|e| CliError::runtime(format!("summary serialization: {e}")))?;
    write_file(path, &(text + "\n"))
}

pub fn write_sweep_summary_json(
    path: &Path,
    base: &ExperimentConfig,
    axis: &str,
    runs: &[(f64, Vec<ComparisonRow>)],
) -> Result<(), CliError> {
    let points: Vec<serde_json::Value> = runs
        .iter()
        .map(|(value, rows)| json!({ "value": value, "mechanisms": summarize(rows) }))
        .collect();
    let text = serde_json::to_string_pretty(&json!({
        "artifact": "radiomap",
        "schema_version": 1,
        "seed": base.seed,
        "config": base,
        "axis": axis,
        "points": points,
    }))
    .map_err(|e| CliError::runtime(format!("summary serialization: {e}")))?;
    write_file(path, &(text + "\n"))
}

pub fn write_map_csv(path: &Path, rows: &[(f64, f64, f64, f64)]) -> Result<(), CliError> {
    let mut out = format!("{MAP_SCHEMA}\nx,y,post_mean,post_var\n");
    for (x, y, mean, var) in rows {
        writeln!(out, "{x},{y},{mean},{var}").expect("string write");
    }
    write_file(path, &out)
}

//! Command-line front end: tutorial reproduction, experiment execution,
//! sweeps, radio-map export, and the property-suite self-test.
//!
//! Exit codes: 0 success, 1 acceptance-check failure, 2 config error,
//! 3 runtime error.

mod output;
mod selftest;
mod tutorial;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use radiomap::config::ExperimentConfig;
use radiomap::field::SiteSubset;
use radiomap::scenario::{run_comparison, summarize, ComparisonRow};

#[derive(Parser)]
#[command(name = "radiomap", version, about = "Crowd-sensed radio mapping simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reproduce the two-user worked example and check its algebra.
    Tutorial {
        /// Use the (0.5, −0.5) placement of user 2 in case 1.
        #[arg(long)]
        case_one_lower: bool,
    },
    /// Run a paired mechanism comparison from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: current directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        iterations: Option<u64>,
        /// Monte-Carlo iterations inside mechanism search loops.
        #[arg(long)]
        mc_iters: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Repeat a run over an axis of parameter values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: Axis,
        /// Comma-separated axis values, e.g. "10,20,30".
        #[arg(long)]
        values: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long)]
        mc_iters: Option<u64>,
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Write the posterior radio map for a set of measurements.
    Map {
        #[arg(long)]
        config: PathBuf,
        /// CSV of "user_id,dbm" rows (may be empty).
        #[arg(long)]
        measurements: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the fast property suites.
    Selftest {
        #[arg(long)]
        parallel: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Axis {
    N,
    Kappa,
    Rho,
}

/// Error carrying the process exit code.
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Tutorial { case_one_lower } => tutorial::run(case_one_lower),
        Cmd::Run {
            config,
            seed,
            out,
            iterations,
            mc_iters,
            parallel,
        } => cmd_run(&config, seed, out, iterations, mc_iters, parallel),
        Cmd::Sweep {
            config,
            axis,
            values,
            seed,
            out,
            iterations,
            mc_iters,
            parallel,
        } => cmd_sweep(&config, axis, &values, seed, out, iterations, mc_iters, parallel),
        Cmd::Map {
            config,
            measurements,
            out,
            seed,
        } => cmd_map(&config, &measurements, out, seed),
        Cmd::Selftest { parallel } => {
            if let Err(e) = init_threads(parallel) {
                Err(e)
            } else {
                selftest::run()
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn init_threads(parallel: Option<usize>) -> Result<(), CliError> {
    if let Some(k) = parallel {
        if k == 0 {
            return Err(CliError::config("--parallel must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::runtime(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn load_config(
    path: &Path,
    seed: Option<u64>,
    iterations: Option<u64>,
    mc_iters: Option<u64>,
) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)
        .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = iterations {
        cfg.iterations = n;
    }
    if let Some(m) = mc_iters {
        cfg.mechanism.mc_iterations = Some(m);
    }
    cfg.validate().map_err(CliError::config)?;
    Ok(cfg)
}

fn out_dir(out: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = out.unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn execute(cfg: &ExperimentConfig) -> Result<Vec<ComparisonRow>, CliError> {
    let scenario = cfg.build_scenario();
    run_comparison(
        &scenario,
        &cfg.mechanisms,
        &cfg.mechanism_config(),
        cfg.iterations,
    )
    .map_err(|e| CliError::runtime(format!("simulation failed: {e}")))
}

fn cmd_run(
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    iterations: Option<u64>,
    mc_iters: Option<u64>,
    parallel: Option<usize>,
) -> Result<(), CliError> {
    init_threads(parallel)?;
    let cfg = load_config(config, seed, iterations, mc_iters)?;
    let dir = out_dir(out)?;
    let rows = execute(&cfg)?;
    let summaries = summarize(&rows);
    output::write_results_csv(&dir.join("results.csv"), &rows)?;
    output::write_summary_json(&dir.join("summary.json"), &cfg, &summaries)?;
    for s in &summaries {
        println!(
            "{:10} mean utility {:8.4} ± {:.4}  batches {:5.2}  offers {:5.2}",
            s.mechanism.label(),
            s.mean_utility,
            s.stderr_utility,
            s.mean_batches,
            s.mean_offers
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    config: &Path,
    axis: Axis,
    values: &str,
    seed: Option<u64>,
    out: Option<PathBuf>,
    iterations: Option<u64>,
    mc_iters: Option<u64>,
    parallel: Option<usize>,
) -> Result<(), CliError> {
    init_threads(parallel)?;
    let base = load_config(config, seed, iterations, mc_iters)?;
    let dir = out_dir(out)?;
    let parsed: Result<Vec<f64>, _> = values
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect();
    let parsed = parsed.map_err(|e| CliError::config(format!("bad --values: {e}")))?;
    if parsed.is_empty() {
        return Err(CliError::config("--values must not be empty"));
    }

    let mut all: Vec<(f64, Vec<ComparisonRow>)> = Vec::new();
    for &v in &parsed {
        let mut cfg = base.clone();
        match axis {
            Axis::N => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(CliError::config(format!("n value {v} is not a positive integer")));
                }
                cfg.n_users = v as usize;
            }
            Axis::Kappa => cfg.valuation.kappa = v,
            Axis::Rho => cfg.rho = v,
        }
        cfg.validate().map_err(CliError::config)?;
        let rows = execute(&cfg)?;
        let summaries = summarize(&rows);
        for s in &summaries {
            println!(
                "{axis:?}={v:<6} {:10} mean utility {:8.4} ± {:.4}",
                s.mechanism.label(),
                s.mean_utility,
                s.stderr_utility
            );
        }
        all.push((v, rows));
    }

    let axis_name = match axis {
        Axis::N => "n",
        Axis::Kappa => "kappa",
        Axis::Rho => "rho",
    };
    output::write_sweep_csv(&dir.join("sweep.csv"), axis_name, &all)?;
    output::write_sweep_summary_json(&dir.join("sweep_summary.json"), &base, axis_name, &all)?;
    Ok(())
}

fn cmd_map(
    config: &Path,
    measurements: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let cfg = load_config(config, seed, None, None)?;
    let dir = out_dir(out)?;
    let scenario = cfg.build_scenario();
    let field = scenario
        .field()
        .map_err(|e| CliError::runtime(format!("field construction: {e}")))?;

    let text = std::fs::read_to_string(measurements)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", measurements.display())))?;
    let mut readings: Vec<(usize, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',');
        let mut parse = || -> Option<(usize, f64)> {
            let id = parts.next()?.trim().parse::<usize>().ok()?;
            let dbm = parts.next()?.trim().parse::<f64>().ok()?;
            Some((id, dbm))
        };
        let (id, dbm) = parse().ok_or_else(|| {
            CliError::config(format!("measurements line {}: expected 'user_id,dbm'", lineno + 1))
        })?;
        if id >= scenario.users.len() {
            return Err(CliError::config(format!("unknown user id {id}")));
        }
        readings.push((id, dbm));
    }
    readings.sort_by_key(|r| r.0);
    readings.dedup_by_key(|r| r.0);
    let given: SiteSubset = readings.iter().map(|r| r.0).collect();
    let values: Vec<f64> = readings.iter().map(|r| r.1).collect();

    let n_users = field.n_users();
    let mut rows = Vec::new();
    for g in 0..field.n_grid() {
        let target = n_users + g;
        let mean = field
            .conditional_mean(target, &given, &values)
            .map_err(|e| CliError::runtime(e.to_string()))?;
        let var = field
            .conditional_variance(target, &given)
            .map_err(|e| CliError::runtime(e.to_string()))?;
        let loc = field.location(target);
        rows.push((loc.x, loc.y, mean, var));
    }
    output::write_map_csv(&dir.join("map.csv"), &rows)?;
    println!("wrote {} grid points to {}", rows.len(), dir.join("map.csv").display());
    Ok(())
}

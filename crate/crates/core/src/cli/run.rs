use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::RunConfig;
use super::io::{write_summary, write_trace, SummaryRow};
use crate::ch::{build_problem, ch_ppgd_solve, SolveStatus};
use crate::spectral::{SpectralContext, ZeroModePolicy};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Converged,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub outcome: Outcome,
    pub summary: SummaryRow,
    pub out_dir: PathBuf,
}

/// Solves one configuration and writes `trace.csv`, `final_field.csv` and a
/// one-row `summary.csv` into `out_dir`. A failed solve still flushes the
/// partial trace.
pub fn run_config(config: &RunConfig, out_dir: &Path) -> Result<RunReport> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let problem = build_problem(&config.problem_spec())?;
    let solver = config.solver_config()?;
    let ctx =
        SpectralContext::with_options(problem.grid, config.dealias(), ZeroModePolicy::Project);
    let solution = match ch_ppgd_solve(&ctx, &problem, &solver) {
        Ok(s) => s,
        Err(failure) => {
            write_trace(out_dir.join("trace.csv"), &failure.trace)?;
            return Err(failure.source);
        }
    };
    write_trace(out_dir.join("trace.csv"), &solution.trace)?;
    solution.field.save_csv(out_dir.join("final_field.csv"))?;
    let summary = SummaryRow {
        delta0: config.delta0,
        outer_iters: solution.trace.len(),
        fft_count: solution.total_ffts(),
        inner_iters_total: solution.total_inner_iters(),
        wall_time_s: solution.wall_time_s(),
    };
    write_summary(out_dir.join("summary.csv"), std::slice::from_ref(&summary))?;
    Ok(RunReport {
        outcome: match solution.status {
            SolveStatus::Converged => Outcome::Converged,
            SolveStatus::MaxIters => Outcome::MaxIters,
        },
        summary,
        out_dir: out_dir.to_path_buf(),
    })
}

/// `run --config <path> [--out <dir>]`
pub fn run(config_path: &Path, out: Option<&Path>) -> Result<RunReport> {
    let config = RunConfig::load(config_path)?;
    let out = out.map_or_else(|| config.output_dir.clone(), Path::to_path_buf);
    run_config(&config, &out)
}

#[derive(Debug)]
pub struct SweepReport {
    /// Successful runs, sorted by `δ₀` descending.
    pub rows: Vec<SummaryRow>,
    pub outcomes: Vec<(f64, Outcome)>,
    pub failures: Vec<(f64, Error)>,
}

/// Worker count from `PPGD_THREADS`, if set.
pub fn ppgd_threads() -> Result<Option<usize>> {
    match std::env::var("PPGD_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!(
                "PPGD_THREADS must be a positive integer, got `{v}`"
            ))),
        },
    }
}

/// Parses a comma-separated `δ₀` list; every entry must be positive.
pub fn parse_delta0_list(text: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad delta0 entry `{}`: {e}", s.trim())))
        })
        .collect::<Result<_>>()?;
    validate_delta0s(&values)?;
    Ok(values)
}

fn validate_delta0s(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config("delta0 list is empty".into()));
    }
    if let Some(bad) = values.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(Error::Config(format!("delta0 must be positive, got {bad}")));
    }
    Ok(())
}

/// Runs every `δ₀` with otherwise identical settings, in parallel (capped
/// by `PPGD_THREADS`), each into `out_dir/delta0_<δ₀>/`, then writes
/// `out_dir/summary.csv`. Individual failures do not stop the sweep.
pub fn sweep_config(config: &RunConfig, delta0s: &[f64], out_dir: &Path) -> Result<SweepReport> {
    validate_delta0s(delta0s)?;
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = ppgd_threads()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<(f64, Result<RunReport>)> = pool.install(|| {
        delta0s
            .par_iter()
            .map(|&d| {
                let cfg = RunConfig {
                    delta0: d,
                    ..config.clone()
                };
                (d, run_config(&cfg, &out_dir.join(format!("delta0_{d}"))))
            })
            .collect()
    });

    let mut report = SweepReport {
        rows: Vec::new(),
        outcomes: Vec::new(),
        failures: Vec::new(),
    };
    for (d, result) in results {
        match result {
            Ok(r) => {
                report.rows.push(r.summary);
                report.outcomes.push((d, r.outcome));
            }
            Err(e) => report.failures.push((d, e)),
        }
    }
    report.rows.sort_by(|a, b| b.delta0.total_cmp(&a.delta0));
    write_summary(out_dir.join("summary.csv"), &report.rows)?;
    Ok(report)
}

/// `sweep --config <path> --delta0 <list>`
pub fn sweep(config_path: &Path, delta0s: &[f64], out: Option<&Path>) -> Result<SweepReport> {
    validate_delta0s(delta0s)?;
    let config = RunConfig::load(config_path)?;
    let out = out.map_or_else(|| config.output_dir.clone(), Path::to_path_buf);
    sweep_config(&config, delta0s, &out)
}

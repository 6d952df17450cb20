//! Command-line front end: TOML run configurations, single runs, `δ₀`
//! sweeps, trace plotting and the theory check suite.
//!
//! Every subcommand is also a plain library function, so the examples and
//! tests drive the same code as the `ppgd` binary.

mod config;
mod io;
mod render;
mod run;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{DealiasKey, MetricKey, RunConfig};
pub use io::{
    read_summary, read_trace, write_records, write_summary, write_trace, SummaryRow,
    SUMMARY_HEADER, TRACE_HEADER,
};
pub use render::{render, SeriesPoint};
pub use run::{
    parse_delta0_list, ppgd_threads, run, run_config, sweep, sweep_config, Outcome, RunReport,
    SweepReport,
};

use crate::theory::{run_suite, CheckReport, SuiteConfig};
use crate::Result;

#[derive(Debug, Parser)]
#[command(
    name = "ppgd",
    version,
    about = "PPGD solver for the stationary Cahn-Hilliard equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one configuration for several mobility floors δ₀.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated, e.g. `0.1,0.01,0.001`.
        #[arg(long)]
        delta0: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plot residual, energy-gap and inner-iteration histories.
    Render {
        #[arg(long, num_args = 1.., required = true)]
        traces: Vec<PathBuf>,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
    /// Run the convergence-theory check suite.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Runs the PPGD checks with a step above σ₀ (test hook).
        #[arg(long, hide = true)]
        force_failure: bool,
    },
}

/// Process outcome; errors are reported separately and map to exit code 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Failure,
    MaxIters,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Failure => 1,
            Status::MaxIters => 2,
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<Status> {
    match cli.command {
        Command::Run { config, out: dir } => {
            let report = run(&config, dir.as_deref())?;
            let s = &report.summary;
            writeln!(
                out,
                "{:?}: {} outer iterations, {} inner, {} FFTs, {:.3} s -> {}",
                report.outcome,
                s.outer_iters,
                s.inner_iters_total,
                s.fft_count,
                s.wall_time_s,
                report.out_dir.display()
            )?;
            Ok(match report.outcome {
                Outcome::Converged => Status::Success,
                Outcome::MaxIters => Status::MaxIters,
            })
        }
        Command::Sweep {
            config,
            delta0,
            out: dir,
        } => {
            let values = parse_delta0_list(&delta0)?;
            let report = sweep(&config, &values, dir.as_deref())?;
            writeln!(out, "{SUMMARY_HEADER}")?;
            for r in &report.rows {
                writeln!(
                    out,
                    "{},{},{},{},{:.3}",
                    r.delta0, r.outer_iters, r.fft_count, r.inner_iters_total, r.wall_time_s
                )?;
            }
            for (d, e) in &report.failures {
                writeln!(out, "delta0 = {d}: FAILED: {e}")?;
            }
            Ok(if !report.failures.is_empty() {
                Status::Failure
            } else if report.outcomes.iter().any(|(_, o)| *o == Outcome::MaxIters) {
                Status::MaxIters
            } else {
                Status::Success
            })
        }
        Command::Render { traces, out: dir } => {
            for path in render(&traces, &dir)? {
                writeln!(out, "{}", path.display())?;
            }
            Ok(Status::Success)
        }
        Command::Check {
            seed,
            force_failure,
        } => {
            let config = SuiteConfig {
                seed,
                sigma_scale: if force_failure { 4.0 } else { 1.0 },
                ..SuiteConfig::default()
            };
            let start = std::time::Instant::now();
            let reports = run_suite(config)?;
            write_check_table(out, &reports)?;
            writeln!(out, "elapsed {:.2} s", start.elapsed().as_secs_f64())?;
            Ok(if reports.iter().all(CheckReport::passed) {
                Status::Success
            } else {
                Status::Failure
            })
        }
    }
}

/// Deterministic part of the check output (no timings).
pub fn write_check_table(out: &mut dyn Write, reports: &[CheckReport]) -> Result<()> {
    writeln!(
        out,
        "{:<34} {:>8} {:>10} {:>12}  result",
        "check", "samples", "violations", "worst slack"
    )?;
    for r in reports {
        writeln!(
            out,
            "{:<34} {:>8} {:>10} {:>12.3e}  {}",
            r.name,
            r.samples,
            r.violations,
            r.worst_slack,
            if r.passed() { "PASS" } else { "FAIL" }
        )?;
        writeln!(out, "    {}", r.detail)?;
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    writeln!(
        out,
        "{} checks, {failed} failed (seed {})",
        reports.len(),
        reports.first().map_or(0, |r| r.seed)
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn render_requires_traces() {
        assert!(Cli::try_parse_from(["ppgd", "render"]).is_err());
        assert!(Cli::try_parse_from(["ppgd", "render", "--traces"]).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            [Status::Success, Status::Failure, Status::MaxIters].map(Status::code),
            [0, 1, 2]
        );
    }
}

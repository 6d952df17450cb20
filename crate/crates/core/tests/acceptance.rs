//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Tolerances are pinned below and never relaxed.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use ppgd::ch::{
    build_problem, ch_ppgd_solve, ChObjective, InnerTheta, ProblemSpec, SolveStatus, SolverConfig,
    TraceRecord, WarmStart,
};
use ppgd::cli::{read_trace, run_config, sweep_config, RunConfig, SweepReport};
use ppgd::descent::{
    pgd_minimize_observed, ppgd_minimize, ExactComposite, IterationBudget, StepPolicy, StopMetric,
};
use ppgd::elliptic::InnerSolver;
use ppgd::spectral::{
    mean_zero_project, MobilityField, SpectralContext, SpectralField, SpectralPreconditioner,
};
use ppgd::theory::{run_suite, SuiteConfig};

// Pinned tolerances.
const THEORY_MIN_PAIRS: usize = 10_000;
const THEORY_ITERS: usize = 500;
const THEORY_BUDGET: Duration = Duration::from_secs(30);
const STEP_TOL: f64 = 1e-12;
const DENSE_LU_TOL: f64 = 1e-8;
const INNER_EXACT_BUDGET: Duration = Duration::from_secs(5);
const RATE_SLACK: f64 = 0.05;
const RATE_BUDGET: Duration = Duration::from_secs(30);
const TOL_OUTER: f64 = 1e-6;
const MAX_OUTER: usize = 100;
const TABLE_RUN_BUDGET: Duration = Duration::from_secs(60);
const OVERLAP_REL: f64 = 0.2;
const OVERLAP_FIRST_INDEX: usize = 2;
const OVERLAP_COUNT_DIFF: usize = 5;
const INNER_SPREAD: usize = 3;
const STABILITY_FRACTION: f64 = 0.2;
const REDUCTION_INNER_TOL: f64 = 1e-14;
const REDUCTION_TOL: f64 = 1e-12;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, detail: String) -> Verdict {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn standard(delta0: f64) -> ProblemSpec {
    ProblemSpec {
        delta0,
        ..ProblemSpec::default()
    }
}

struct Sweep {
    _dir: tempfile::TempDir,
    root: PathBuf,
    report: SweepReport,
}

impl Sweep {
    fn trace(&self, delta0: f64) -> Vec<TraceRecord> {
        read_trace(self.root.join(format!("delta0_{delta0}/trace.csv"))).unwrap()
    }

    fn field(&self, delta0: f64) -> SpectralField {
        SpectralField::load_csv(self.root.join(format!("delta0_{delta0}/final_field.csv"))).unwrap()
    }
}

const SWEEP: [f64; 3] = [0.1, 0.01, 0.001];

fn sweep() -> &'static Sweep {
    static CELL: OnceLock<Sweep> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let report = sweep_config(&RunConfig::default(), &SWEEP, &root).unwrap();
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        Sweep {
            _dir: dir,
            root,
            report,
        }
    })
}

fn theory_suite() -> Verdict {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_ppgd"))
        .args(["check"])
        .output()
        .map_err(|e| e.to_string())?;
    let cli_time = start.elapsed();
    let reports = run_suite(SuiteConfig::default()).map_err(|e| e.to_string())?;
    let config = SuiteConfig::default();
    let violations: usize = reports.iter().map(|r| r.violations).sum();
    let pairs_ok = reports[..2].iter().all(|r| r.samples >= THEORY_MIN_PAIRS);
    let iters_ok =
        config.iters >= THEORY_ITERS && reports[2..].iter().all(|r| r.samples >= THEORY_ITERS);
    ensure(
        out.status.code() == Some(0)
            && violations == 0
            && pairs_ok
            && iters_ok
            && cli_time < THEORY_BUDGET,
        format!(
            "{} checks, {violations} violations, ppgd check exit {:?} in {:.2} s",
            reports.len(),
            out.status.code(),
            cli_time.as_secs_f64()
        ),
    )
}

fn inner_exactness() -> Verdict {
    let start = Instant::now();
    let budget = IterationBudget::new(1000, 1e-6, StopMetric::IncrementSup).unwrap();
    let p = build_problem(&standard(0.1)).unwrap();
    let ctx = SpectralContext::new(p.grid);
    let one = MobilityField::constant(p.grid, 1.0).unwrap();
    let rhs = mean_zero_project(&p.f);
    let (_, trace) = InnerSolver::new(&ctx, &one)
        .unwrap()
        .solve(&rhs, &SpectralField::zeros(p.grid), budget)
        .map_err(|e| e.to_string())?;
    let alpha_err = (trace.steps[0] - 1.0).abs();

    let small = build_problem(&ProblemSpec {
        n: 16,
        ..standard(0.1)
    })
    .unwrap();
    let ctx16 = SpectralContext::new(small.grid);
    let rhs16 = mean_zero_project(&small.f);
    let tight = IterationBudget::new(100_000, 1e-13, StopMetric::ResidualNorm).unwrap();
    let (u, _) = InnerSolver::new(&ctx16, &small.mobility)
        .unwrap()
        .solve(&rhs16, &SpectralField::zeros(small.grid), tight)
        .map_err(|e| e.to_string())?;
    let lu_err = u.max_abs_diff(&common::solve_variable_poisson(&small.mobility, &rhs16));
    let elapsed = start.elapsed();
    ensure(
        trace.iterations == 1 && alpha_err <= STEP_TOL && lu_err <= DENSE_LU_TOL && elapsed < INNER_EXACT_BUDGET,
        format!(
            "M ≡ 1: {} iteration(s), |α − 1| = {alpha_err:.1e}; N = 16 vs dense LU {lu_err:.1e}; {:.2} s",
            trace.iterations,
            elapsed.as_secs_f64()
        ),
    )
}

/// Per-step contraction of the inner iteration: worst energy-norm error
/// ratio, worst `H̊⁻¹` residual ratio and mean residual ratio.
fn inner_rates(delta0: f64) -> (f64, f64, f64, f64) {
    let p = build_problem(&standard(delta0)).unwrap();
    let ctx = SpectralContext::new(p.grid);
    let rhs = mean_zero_project(&p.f);
    let budget = IterationBudget::new(200_000, 1e-13, StopMetric::ResidualNorm).unwrap();
    let (_, trace) = InnerSolver::new(&ctx, &p.mobility)
        .unwrap()
        .solve(&rhs, &SpectralField::zeros(p.grid), budget)
        .unwrap();
    let kappa = (1.0 + delta0 * delta0).sqrt() / delta0;
    let bound = (kappa - 1.0) / (kappa + 1.0);
    // Energy error ½‖e_n‖²_A as the tail sum of exact per-step decrements.
    let decrements: Vec<f64> = trace.energies.windows(2).map(|w| w[0] - w[1]).collect();
    let mut gaps = vec![0.0; decrements.len() + 1];
    for n in (0..decrements.len()).rev() {
        gaps[n] = gaps[n + 1] + decrements[n];
    }
    let resolvable = |g: f64| g > 1e-16 * gaps[0];
    let energy_rate = gaps
        .windows(2)
        .take_while(|w| resolvable(w[1]))
        .map(|w| (w[1] / w[0]).sqrt())
        .fold(0.0, f64::max);
    let r = &trace.residual_norms;
    let worst_residual = r.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    let mean_residual = (r[r.len() - 1] / r[0]).powf(1.0 / (r.len() - 1) as f64);
    (bound, energy_rate, worst_residual, mean_residual)
}

fn inner_rate() -> Verdict {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for delta0 in [0.1, 0.01] {
        let (bound, energy, worst, mean) = inner_rates(delta0);
        ok &= energy <= bound + RATE_SLACK && mean <= bound + RATE_SLACK;
        parts.push(format!(
            "δ₀ = {delta0}: bound {bound:.4}, energy-norm worst {energy:.4}, residual mean {mean:.4} (worst single step {worst:.4})"
        ));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < RATE_BUDGET;
    ensure(
        ok,
        format!("{}; {:.2} s", parts.join("; "), elapsed.as_secs_f64()),
    )
}

fn standard_run() -> Verdict {
    let p = build_problem(&standard(0.1)).unwrap();
    let ctx = SpectralContext::new(p.grid);
    let start = Instant::now();
    let s = ch_ppgd_solve(&ctx, &p, &SolverConfig::default()).map_err(|f| f.source.to_string())?;
    let elapsed = start.elapsed();
    let last = s.trace.last().unwrap().increment_sup;
    ensure(
        s.status == SolveStatus::Converged
            && s.trace.len() <= MAX_OUTER
            && last <= TOL_OUTER
            && elapsed < TABLE_RUN_BUDGET,
        format!(
            "{:?} with {} outer iterations, final increment {last:.2e}, {:.2} s",
            s.status,
            s.trace.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn overlap() -> Verdict {
    let s = sweep();
    let (a, b) = (s.trace(0.1), s.trace(0.001));
    let worst = a
        .iter()
        .zip(&b)
        .skip(OVERLAP_FIRST_INDEX)
        .map(|(x, y)| {
            let d = (x.residual_l_norm - y.residual_l_norm).abs();
            d / x.residual_l_norm.min(y.residual_l_norm)
        })
        .fold(0.0, f64::max);
    let count_diff = a.len().abs_diff(b.len());
    let common = a.len().min(b.len()).saturating_sub(OVERLAP_FIRST_INDEX);
    ensure(
        worst <= OVERLAP_REL && count_diff <= OVERLAP_COUNT_DIFF,
        format!(
            "{common} common indices ≥ {OVERLAP_FIRST_INDEX}, worst relative gap {worst:.3}; outer counts {} vs {}",
            a.len(),
            b.len()
        ),
    )
}

fn inner_stationarity() -> Verdict {
    let s = sweep();
    let mut ok = true;
    let mut parts = Vec::new();
    for d in SWEEP {
        // Every outer iteration after the first.
        let counts: Vec<usize> = s.trace(d).iter().skip(1).map(|r| r.inner_iters).collect();
        let spread = counts.iter().max().unwrap_or(&0) - counts.iter().min().unwrap_or(&0);
        ok &= spread <= INNER_SPREAD;
        parts.push(format!("δ₀ = {d}: {counts:?}"));
    }
    ensure(ok, parts.join("; "))
}

fn cost_monotonicity() -> Verdict {
    let rows = &sweep().report.rows;
    let ffts: Vec<u64> = rows.iter().map(|r| r.fft_count).collect();
    let inner: Vec<usize> = rows.iter().map(|r| r.inner_iters_total).collect();
    let decreasing = rows.windows(2).all(|w| w[0].delta0 > w[1].delta0);
    ensure(
        rows.len() == 3
            && decreasing
            && ffts.windows(2).all(|w| w[0] <= w[1])
            && inner.windows(2).all(|w| w[0] <= w[1]),
        format!("δ₀ 0.1 → 0.001: FFTs {ffts:?}, inner {inner:?}"),
    )
}

fn stability() -> Verdict {
    let s = sweep();
    let (u1, u2) = (s.field(0.01), s.field(0.1));
    let diff = u1.max_abs_diff(&u2);
    let scale = u1.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ensure(
        diff <= STABILITY_FRACTION * scale,
        format!(
            "‖u(0.01) − u(0.1)‖_∞ = {diff:.3e}, ‖u(0.01)‖_∞ = {scale:.3e}, ratio {:.3}",
            diff / scale
        ),
    )
}

fn zero_perturbation() -> Verdict {
    let p = build_problem(&ProblemSpec {
        mobility_constant: Some(1.0),
        ..standard(0.1)
    })
    .unwrap();
    let ctx = SpectralContext::new(p.grid);
    let precond = SpectralPreconditioner::new(&ctx, p.lambda, p.gamma).unwrap();
    let outer = IterationBudget::new(1000, TOL_OUTER, StopMetric::IncrementSup).unwrap();
    let theta = InnerTheta {
        warm_start: WarmStart::Iterate,
        budget: IterationBudget::new(1000, REDUCTION_INNER_TOL, StopMetric::IncrementSup).unwrap(),
    };

    let mut perturbed = ChObjective::new(&ctx, &p, false).unwrap();
    let mut ppgd_iterates = Vec::new();
    let mut ppgd_residuals = Vec::new();
    ppgd_minimize(
        &mut perturbed,
        &precond,
        SpectralField::zeros(p.grid),
        StepPolicy::Fixed(1.0),
        |_, _| Some(theta),
        outer,
        |info, _| {
            ppgd_iterates.push(info.iterate.clone());
            ppgd_residuals.push(info.residual_norm);
        },
    )
    .map_err(|e| e.to_string())?;

    let exact = ChObjective::new(&ctx, &p, false).unwrap();
    let mut pgd_iterates = Vec::new();
    let mut pgd_residuals = Vec::new();
    pgd_minimize_observed(
        &ExactComposite(&exact),
        &precond,
        SpectralField::zeros(p.grid),
        StepPolicy::Fixed(1.0),
        outer,
        |info| {
            pgd_iterates.push(info.iterate.clone());
            pgd_residuals.push(info.residual_norm);
        },
    )
    .map_err(|e| e.to_string())?;

    let worst = ppgd_iterates
        .iter()
        .zip(&pgd_iterates)
        .map(|(a, b)| a.max_abs_diff(b))
        .fold(0.0, f64::max);
    let worst_residual = ppgd_residuals
        .iter()
        .zip(&pgd_residuals)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(
        ppgd_iterates.len() == pgd_iterates.len() && worst <= REDUCTION_TOL && worst_residual <= REDUCTION_TOL,
        format!(
            "{} vs {} iterates, worst iterate gap {worst:.1e}, worst residual-norm gap {worst_residual:.1e}",
            ppgd_iterates.len(),
            pgd_iterates.len()
        ),
    )
}

fn strip_wall_time(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_config(&RunConfig::default(), out).map_err(|e| e.to_string())?;
    }
    let header = std::fs::read_to_string(a.join("trace.csv")).unwrap();
    let last_column = header
        .lines()
        .next()
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .to_string();
    let traces_equal =
        strip_wall_time(&a.join("trace.csv")) == strip_wall_time(&b.join("trace.csv"));
    let fields_equal = std::fs::read(a.join("final_field.csv")).unwrap()
        == std::fs::read(b.join("final_field.csv")).unwrap();
    ensure(
        last_column == "wall_time_s" && traces_equal && fields_equal,
        format!("trace.csv equal modulo wall time: {traces_equal}; final fields identical: {fields_equal}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("theory suite", theory_suite),
        ("inner solver exactness", inner_exactness),
        ("inner geometric rate", inner_rate),
        ("end-to-end standard run", standard_run),
        ("overlap across mobility ratios", overlap),
        ("inner-iteration stationarity", inner_stationarity),
        ("cost monotonicity", cost_monotonicity),
        ("solution stability", stability),
        ("zero-perturbation reduction", zero_perturbation),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            Err(format!(
                "panicked: {:?}",
                e.downcast_ref::<String>()
                    .map(String::as_str)
                    .or(e.downcast_ref::<&str>().copied())
            ))
        });
        let (tag, detail) = match verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} criterion {:>2} {name}: {detail} [{:.2} s]",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

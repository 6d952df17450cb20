// The inner solver on its own: `−∇·(M∇ζ) = φ` by PGD preconditioned with
// `−Δ` and an exact line search. The iteration count tracks the mobility
// ratio `M₂/M₁`.

use ppgd::ch::{build_problem, ProblemSpec};
use ppgd::descent::{IterationBudget, StopMetric};
use ppgd::elliptic::InnerSolver;
use ppgd::spectral::{mean_zero_project, SpectralContext, SpectralField};

pub fn run_example(n: usize) -> ppgd::Result<Vec<(f64, usize)>> {
    let base = ProblemSpec {
        n,
        ..ProblemSpec::default()
    };
    let grid = build_problem(&base)?.grid;
    let ctx = SpectralContext::new(grid);
    let budget = IterationBudget::new(5000, 1e-10, StopMetric::ResidualNorm)?;

    let mut counts = Vec::new();
    println!(
        "{:>8} {:>10} {:>6} {:>12} {:>8}",
        "δ₀", "M₂/M₁", "iters", "residual", "ffts"
    );
    for delta0 in [1.0, 0.1, 0.01, 0.001] {
        // Same data each time; only the mobility floor changes.
        let problem = build_problem(&ProblemSpec {
            delta0,
            ..base.clone()
        })?;
        let rhs = mean_zero_project(&problem.f);
        let mobility = problem.mobility;
        let solver = InnerSolver::new(&ctx, &mobility)?;
        let (zeta, trace) = solver.solve(&rhs, &SpectralField::zeros(grid), budget)?;
        println!(
            "{:>8} {:>10.1} {:>6} {:>12.3e} {:>8}",
            delta0,
            mobility.ratio(),
            trace.iterations,
            solver.residual_norm(&rhs, &zeta)?,
            trace.ffts
        );
        counts.push((delta0, trace.iterations));
    }
    Ok(counts)
}

#[allow(dead_code)]
fn main() -> ppgd::Result<()> {
    run_example(64).map(drop)
}

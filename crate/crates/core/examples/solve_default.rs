// Solve the standard stationary Cahn-Hilliard problem with PPGD.
//
// ```bash
// cargo run --release --example solve_default -- 128 0.1
// ```

use ppgd::ch::{build_problem, ch_ppgd_solve_observed, ChSolution, ProblemSpec, SolverConfig};
use ppgd::spectral::SpectralContext;

pub fn run_example(n: usize, delta0: f64) -> ppgd::Result<ChSolution> {
    let problem = build_problem(&ProblemSpec {
        n,
        delta0,
        ..ProblemSpec::default()
    })?;
    let ctx = SpectralContext::new(problem.grid);
    println!(
        "{:>5} {:>12} {:>16} {:>6} {:>8}",
        "k", "‖d̃‖_𝓛", "energy", "inner", "ffts"
    );
    let solution = ch_ppgd_solve_observed(&ctx, &problem, &SolverConfig::default(), |r| {
        println!(
            "{:>5} {:>12.3e} {:>16.10} {:>6} {:>8}",
            r.outer_iter, r.residual_l_norm, r.energy, r.inner_iters, r.cumulative_ffts
        )
    })
    .map_err(|f| f.source)?;
    let v = &solution.field;
    println!(
        "{:?} after {} updates; v ∈ [{:.4}, {:.4}], {:.3} s",
        solution.status,
        solution.updates,
        v.min(),
        v.max(),
        solution.wall_time_s()
    );
    Ok(solution)
}

#[allow(dead_code)]
fn main() -> ppgd::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args
        .next()
        .map_or(Ok(128), |s| s.parse())
        .expect("grid size");
    let delta0 = args.next().map_or(Ok(0.1), |s| s.parse()).expect("delta0");
    run_example(n, delta0).map(drop)
}

// Plugging a user-defined objective into the generic PGD loop. Any type
// implementing `HilbertElement` works; `DVector<f64>` ships with the crate.
//
// Minimizes `Σ cosh(v_i − c_i) + ½‖Dv‖²` with a tridiagonal preconditioner.

use nalgebra::{DMatrix, DVector};
use ppgd::descent::{pgd_minimize, IterationBudget, Objective, StepPolicy, StopMetric};
use ppgd::theory::DensePreconditioner;

struct CoshChain {
    center: DVector<f64>,
    d: DMatrix<f64>,
}

impl Objective<DVector<f64>> for CoshChain {
    fn energy(&self, v: &DVector<f64>) -> f64 {
        (v - &self.center).map(f64::cosh).sum() + 0.5 * (&self.d * v).norm_squared()
    }

    fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        (v - &self.center).map(f64::sinh) + self.d.transpose() * (&self.d * v)
    }
}

pub fn run_example(n: usize) -> ppgd::Result<(usize, f64)> {
    let d = DMatrix::from_fn(n, n, |i, j| match j as i64 - i as i64 {
        0 => 1.0,
        1 => -1.0,
        _ => 0.0,
    });
    let objective = CoshChain {
        center: DVector::from_fn(n, |i, _| (i as f64 / n as f64 * 6.0).sin()),
        d: d.clone(),
    };
    let precond = DensePreconditioner::new(d.transpose() * &d + DMatrix::identity(n, n))?;
    let budget = IterationBudget::new(500, 1e-12, StopMetric::ResidualNorm)?;
    let out = pgd_minimize(
        &objective,
        &precond,
        DVector::zeros(n),
        StepPolicy::Fixed(0.5),
        budget,
    )
    .map_err(|e| ppgd::Error::Precondition(e.to_string()))?;
    let g = objective.gradient(&out.solution).amax();
    println!(
        "{:?} after {} iterations, |∇G|_∞ = {g:.2e}, G = {:.10}",
        out.termination,
        out.iterations,
        objective.energy(&out.solution)
    );
    for (k, r) in out.trace.residual_norms.iter().enumerate().step_by(5) {
        println!("  k = {k:>3}  ‖∇G‖_𝓛⁻¹ = {r:.3e}");
    }
    Ok((out.iterations, g))
}

#[allow(dead_code)]
fn main() -> ppgd::Result<()> {
    run_example(20).map(drop)
}

//! Dense finite-dimensional instances and sampling checks of the
//! convergence estimates for PGD and PPGD.
//!
//! Instances are `G(v) = ½vᵀAv − bᵀv + (β/4)Σv_i⁴` on `ℝⁿ` with an SPD
//! preconditioner `L`. The minimizer comes from damped Newton; perturbations
//! are injected by a seeded [`PerturbationInjector`].

mod checks;
mod dense;
mod inject;

pub use checks::{
    check_convergence_bound, check_dual_lower_trap, check_dual_trap, check_error_free_rate,
    check_invariant_set, check_pgd_geometric, estimate_l_hat, fitted_rate, hessian_bound,
    ppgd_distances, run_suite, verify_dual_trap, CheckReport, PpgdThresholds, SuiteConfig,
    ENLARGED_BALL_FACTOR, L_HAT_INFLATION,
};
pub use dense::{DenseInstance, DensePreconditioner, DenseVector};
pub use inject::{Injection, PerturbationInjector, PerturbedDense};

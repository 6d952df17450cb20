//! Inner solver for `−∇·(M∇u) = φ` on mean-zero periodic fields.
//!
//! Preconditioned gradient descent with the constant-coefficient Laplacian
//! as preconditioner and the exact line search of the quadratic energy
//! `F̃(v) = ½(M∇v, ∇v) − ⟨φ, v⟩`:
//!
//! ```text
//! r_n = φ + Δ_M u_n,   d_n = (−Δ)⁻¹ r_n,   u_{n+1} = u_n + α_n d_n
//! α_n = −[(M∇u_n, ∇d_n) − ⟨φ, d_n⟩] / (M∇d_n, ∇d_n) = ⟨r_n, d_n⟩ / (M∇d_n, ∇d_n)
//! ```
//!
//! Inside the PPGD outer loop the result is the gradient approximation
//! `A(v; θ)`; a solve that hits its cap is reported, not fatal.

use crate::descent::{HilbertElement, IterationBudget, StopMetric};
use crate::spectral::{
    mean_zero_project, FourierSymbol, MobilityField, SpectralContext, SpectralField, Spectrum,
    VariableLaplacian,
};
use crate::{Error, Result};

/// A residual this small relative to `‖φ‖ + ‖Δ_M u‖` is round-off.
const ROUND_OFF_RESIDUAL: f64 = 256.0 * f64::EPSILON;

/// `(−Δ_M) u = φ` with `φ` mean-zero.
#[derive(Debug, Clone)]
pub struct EllipticProblem<'a> {
    mobility: &'a MobilityField,
    rhs: SpectralField,
}

impl<'a> EllipticProblem<'a> {
    pub fn new(mobility: &'a MobilityField, rhs: SpectralField) -> Result<Self> {
        rhs.check_grid(mobility.samples().grid())?;
        let scale = rhs.sup_norm();
        if rhs.mean().abs() > crate::spectral::MEAN_ZERO_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Precondition(format!(
                "right-hand side must be mean-zero (mean = {:e})",
                rhs.mean()
            )));
        }
        Ok(Self { mobility, rhs })
    }

    pub fn mobility(&self) -> &MobilityField {
        self.mobility
    }

    pub fn rhs(&self) -> &SpectralField {
        &self.rhs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerStatus {
    Converged,
    /// Stopped at the iteration cap without meeting the tolerance.
    Capped,
    /// `φ = 0`; the zero field is returned without iterating.
    ZeroRhs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerTrace {
    pub iterations: usize,
    /// `‖r_n‖_{H̊⁻¹}` for each step taken.
    pub residual_norms: Vec<f64>,
    pub steps: Vec<f64>,
    /// `F̃(u_n)` for `n = 0..=iterations`.
    pub energies: Vec<f64>,
    pub ffts: u64,
    pub status: InnerStatus,
}

impl InnerTrace {
    pub fn final_energy(&self) -> f64 {
        self.energies.last().copied().unwrap_or(0.0)
    }

    pub fn capped(&self) -> bool {
        self.status == InnerStatus::Capped
    }
}

/// Inner solver with the mobility split prepared once.
#[derive(Debug)]
pub struct InnerSolver<'ctx> {
    ctx: &'ctx SpectralContext,
    operator: VariableLaplacian<'ctx>,
    preconditioner: FourierSymbol,
    strict: bool,
}

impl<'ctx> InnerSolver<'ctx> {
    pub fn new(ctx: &'ctx SpectralContext, mobility: &MobilityField) -> Result<Self> {
        Ok(Self {
            ctx,
            operator: VariableLaplacian::new(ctx, mobility)?,
            preconditioner: FourierSymbol::inverse_neg_laplacian(ctx.grid()),
            strict: false,
        })
    }

    /// With `strict`, hitting the iteration cap is an error.
    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn operator(&self) -> &VariableLaplacian<'ctx> {
        &self.operator
    }

    /// Runs the iteration from `u0` (projected to mean zero).
    pub fn solve(
        &self,
        rhs: &SpectralField,
        u0: &SpectralField,
        budget: IterationBudget,
    ) -> Result<(SpectralField, InnerTrace)> {
        let ctx = self.ctx;
        let start_ffts = ctx.fft_count();
        let grid = ctx.grid();
        rhs.check_grid(grid)?;
        u0.check_grid(grid)?;

        if rhs.sup_norm() == 0.0 {
            return Ok((
                SpectralField::zeros(grid),
                InnerTrace {
                    iterations: 0,
                    residual_norms: Vec::new(),
                    steps: Vec::new(),
                    energies: vec![0.0],
                    ffts: 0,
                    status: InnerStatus::ZeroRhs,
                },
            ));
        }

        let phi = ctx.forward(rhs)?;
        let phi_norm = phi.inner(&phi).sqrt();
        let mut u = mean_zero_project(u0);
        let mut u_hat = ctx.forward(&u)?;
        let mut trace = InnerTrace {
            iterations: 0,
            residual_norms: Vec::new(),
            steps: Vec::new(),
            energies: Vec::new(),
            ffts: 0,
            status: InnerStatus::Capped,
        };

        loop {
            let lap_u = self.operator.apply_spectrum(&u_hat);
            let mut r = phi.clone();
            r.axpy(1.0, &lap_u);
            if trace.energies.is_empty() {
                // F̃(u) = ½(M∇u,∇u) − ⟨φ,u⟩ = −½⟨φ + r, u⟩
                let mut sum = phi.clone();
                sum.axpy(1.0, &r);
                trace.energies.push(-0.5 * sum.inner(&u_hat));
            }
            let d = self.preconditioner.apply_spectrum(&r);
            let numerator = r.inner(&d);
            let scale = phi_norm + lap_u.inner(&lap_u).sqrt();
            if r.inner(&r).sqrt() <= ROUND_OFF_RESIDUAL * scale || numerator <= 0.0 {
                trace.status = InnerStatus::Converged;
                break;
            }
            let residual = numerator.sqrt();
            if budget.metric == StopMetric::ResidualNorm && residual <= budget.tolerance {
                trace.status = InnerStatus::Converged;
                break;
            }
            if trace.iterations == budget.max_iters {
                break;
            }
            let denominator = self.operator.bilinear(&d, &d);
            if !(denominator > 0.0) {
                trace.status = InnerStatus::Converged;
                break;
            }
            let alpha = numerator / denominator;
            let d_field = ctx.inverse(&d)?;
            u.axpy(alpha, &d_field);
            u_hat.axpy(alpha, &d);
            if !alpha.is_finite() || !u.is_finite() {
                return Err(Error::Diverged {
                    iteration: trace.iterations,
                    stage: "inner solve",
                });
            }
            trace.iterations += 1;
            trace.residual_norms.push(residual);
            trace.steps.push(alpha);
            let previous = *trace.energies.last().unwrap();
            trace.energies.push(previous - 0.5 * numerator * alpha);

            if budget.metric == StopMetric::IncrementSup
                && alpha * d_field.sup_norm() <= budget.tolerance
            {
                trace.status = InnerStatus::Converged;
                break;
            }
        }

        trace.ffts = ctx.fft_count() - start_ffts;
        if trace.status == InnerStatus::Capped && self.strict {
            return Err(Error::InnerCapped {
                iterations: trace.iterations,
            });
        }
        Ok((u, trace))
    }

    /// `F̃(u) = ½(M∇u, ∇u) − ⟨φ, u⟩`, evaluated directly.
    pub fn energy(&self, rhs: &SpectralField, u: &SpectralField) -> Result<f64> {
        let (u_hat, phi) = (self.ctx.forward(u)?, self.ctx.forward(rhs)?);
        Ok(0.5 * self.operator.bilinear(&u_hat, &u_hat) - phi.inner(&u_hat))
    }

    /// Exact line-search step along `d` from `u`; `None` when `d` carries no
    /// energy (the iteration has converged).
    pub fn optimal_step(
        &self,
        rhs: &SpectralField,
        u: &SpectralField,
        d: &SpectralField,
    ) -> Result<Option<f64>> {
        let ctx = self.ctx;
        let (u_hat, d_hat, phi) = (ctx.forward(u)?, ctx.forward(d)?, ctx.forward(rhs)?);
        let denominator = self.operator.bilinear(&d_hat, &d_hat);
        if !(denominator > 0.0) {
            return Ok(None);
        }
        let numerator = self.operator.bilinear(&u_hat, &d_hat) - phi.inner(&d_hat);
        Ok(Some(-numerator / denominator))
    }

    /// `‖φ + Δ_M u‖_{H̊⁻¹}`
    pub fn residual_norm(&self, rhs: &SpectralField, u: &SpectralField) -> Result<f64> {
        let ctx = self.ctx;
        let mut r: Spectrum = ctx.forward(rhs)?;
        r.axpy(1.0, &self.operator.apply_spectrum(&ctx.forward(u)?));
        let d = self.preconditioner.apply_spectrum(&r);
        Ok(r.inner(&d).max(0.0).sqrt())
    }
}

/// Runs the inner PGD iteration from `u0`.
pub fn inner_pgd_solve(
    ctx: &SpectralContext,
    problem: &EllipticProblem<'_>,
    u0: &SpectralField,
    budget: IterationBudget,
) -> Result<(SpectralField, InnerTrace)> {
    InnerSolver::new(ctx, problem.mobility)?.solve(&problem.rhs, u0, budget)
}

/// Exact line-search step for the quadratic inner energy.
pub fn optimal_step(
    ctx: &SpectralContext,
    problem: &EllipticProblem<'_>,
    u: &SpectralField,
    d: &SpectralField,
) -> Result<Option<f64>> {
    InnerSolver::new(ctx, problem.mobility)?.optimal_step(&problem.rhs, u, d)
}

/// `ζ ≈ (−Δ_M)⁻¹ φ` started from `warm_start`.
pub fn approx_inverse_operator(
    ctx: &SpectralContext,
    problem: &EllipticProblem<'_>,
    warm_start: &SpectralField,
    budget: IterationBudget,
) -> Result<(SpectralField, InnerTrace)> {
    inner_pgd_solve(ctx, problem, warm_start, budget)
}

/// `F̃(u)` for the given problem.
pub fn energy(
    ctx: &SpectralContext,
    problem: &EllipticProblem<'_>,
    u: &SpectralField,
) -> Result<f64> {
    InnerSolver::new(ctx, problem.mobility)?.energy(&problem.rhs, u)
}

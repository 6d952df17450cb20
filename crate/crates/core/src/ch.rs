//! Stationary Cahn-Hilliard problem with variable mobility.
//!
//! Minimizes
//!
//! ```text
//! G(v) = ½‖v − u⋆‖²_{H̊⁻¹,M} + ¼‖v‖⁴_{L⁴} + ½‖∇v‖² − (f, v)
//! ```
//!
//! over mean-zero periodic fields, split as `E` (the last three terms) plus
//! `F` (the mobility-weighted dual norm). `δF(v) = (−Δ_M)⁻¹(v − u⋆)` is only
//! available through the inner solver of [`crate::elliptic`], so the outer
//! loop is PPGD with the preconditioner `𝓛 = λ(−Δ)⁻¹ + γ − Δ`.

use std::cell::Cell;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::descent::{
    ppgd_minimize, CompositeObjective, DescentError, ExactSplit, HilbertElement, IterationBudget,
    StepPolicy, StopMetric, Termination,
};
use crate::elliptic::{InnerSolver, InnerTrace};
use crate::spectral::{
    l4_norm_pow4, mean_zero_project, FourierSymbol, Grid, MobilityField, SpectralContext,
    SpectralField, SpectralPreconditioner, MEAN_ZERO_TOLERANCE,
};
use crate::{Error, Result};

/// `b(x, y) = exp(cos(2π(x − x0)/ℓ) + cos(2π(y − y0)/ℓ))`
pub fn blob(grid: Grid, x0: f64, y0: f64) -> SpectralField {
    let w = 2.0 * std::f64::consts::PI / grid.length();
    SpectralField::from_fn(grid, |x, y| {
        ((w * (x - x0)).cos() + (w * (y - y0)).cos()).exp()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    #[default]
    Blob,
    Zero,
}

/// Everything needed to assemble a [`ChProblem`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub n: usize,
    pub length: f64,
    pub delta0: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub f_center: (f64, f64),
    pub ustar_center: (f64, f64),
    pub f_data: DataKind,
    pub ustar_data: DataKind,
    /// Replaces the frozen mobility `M(u⋆)` by a constant.
    pub mobility_constant: Option<f64>,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            n: 128,
            length: 1.0,
            delta0: 0.1,
            lambda: 1.0,
            gamma: 0.0,
            f_center: (0.25, 0.25),
            ustar_center: (0.75, 0.75),
            f_data: DataKind::Blob,
            ustar_data: DataKind::Blob,
            mobility_constant: None,
        }
    }
}

/// Problem data, immutable once built.
#[derive(Debug, Clone)]
pub struct ChProblem {
    pub grid: Grid,
    pub f: SpectralField,
    pub u_star: SpectralField,
    pub mobility: MobilityField,
    pub delta0: f64,
    pub lambda: f64,
    pub gamma: f64,
}

/// `M(w) = √((1 − w²)² + δ₀²)`, bounded by `δ₀ ≤ M ≤ √(1 + δ₀²)` for `|w| ≤ 1`.
pub fn mobility_of(u_star: &SpectralField, delta0: f64) -> Result<MobilityField> {
    let samples = u_star.map(|w| ((1.0 - w * w).powi(2) + delta0 * delta0).sqrt());
    MobilityField::with_bounds(samples, delta0, (1.0 + delta0 * delta0).sqrt())
}

pub fn build_problem(spec: &ProblemSpec) -> Result<ChProblem> {
    if !(spec.delta0 > 0.0 && spec.delta0.is_finite()) {
        return Err(Error::Config(format!(
            "delta0 must be positive, got {}",
            spec.delta0
        )));
    }
    if !(spec.lambda > 0.0) || !(spec.gamma >= 0.0) {
        return Err(Error::Config(format!(
            "need lambda > 0 and gamma >= 0 (got {}, {})",
            spec.lambda, spec.gamma
        )));
    }
    let grid = Grid::new(spec.n, spec.length)?;
    for (name, (x, y)) in [
        ("f_center", spec.f_center),
        ("ustar_center", spec.ustar_center),
    ] {
        let inside = |c: f64| (0.0..spec.length).contains(&c);
        if !inside(x) || !inside(y) {
            return Err(Error::Config(format!(
                "{name} ({x}, {y}) lies outside [0, ℓ)²"
            )));
        }
    }
    let f = match spec.f_data {
        DataKind::Blob => blob(grid, spec.f_center.0, spec.f_center.1),
        DataKind::Zero => SpectralField::zeros(grid),
    };
    let u_star = match spec.ustar_data {
        DataKind::Blob => {
            let b = mean_zero_project(&blob(grid, spec.ustar_center.0, spec.ustar_center.1));
            let scale = b.sup_norm();
            b.map(|v| v / scale)
        }
        DataKind::Zero => SpectralField::zeros(grid),
    };
    let mobility = match spec.mobility_constant {
        Some(c) => MobilityField::constant(grid, c)?,
        None => mobility_of(&u_star, spec.delta0)?,
    };
    Ok(ChProblem {
        grid,
        f,
        u_star,
        mobility,
        delta0: spec.delta0,
        lambda: spec.lambda,
        gamma: spec.gamma,
    })
}

fn require_mean_zero(v: &SpectralField) -> Result<()> {
    if v.mean().abs() > MEAN_ZERO_TOLERANCE * v.sup_norm().max(1.0) {
        return Err(Error::Precondition(format!(
            "iterate must be mean-zero (mean = {:e})",
            v.mean()
        )));
    }
    Ok(())
}

fn energy_parts(problem: &ChProblem, v: &SpectralField, zeta: &SpectralField, h1_sq: f64) -> f64 {
    let mut diff = v.clone();
    diff.axpy(-1.0, &problem.u_star);
    0.5 * zeta.dot(&diff) + 0.25 * l4_norm_pow4(v) + 0.5 * h1_sq - problem.f.dot(v)
}

/// `G(v)` with the dual-norm term evaluated as `½(ζ, v − u⋆)`; exact when
/// `ζ = (−Δ_M)⁻¹(v − u⋆)`.
pub fn ch_energy(
    ctx: &SpectralContext,
    problem: &ChProblem,
    v: &SpectralField,
    zeta: &SpectralField,
) -> Result<f64> {
    require_mean_zero(v)?;
    let h1 = ctx.h1_seminorm(v)?;
    Ok(energy_parts(problem, v, zeta, h1 * h1))
}

/// `(δE(v), A(v; θ))` with `δE = Π₀(v³ − Δv − f)`; the perturbed residual is
/// `r̃ = −(δE + ζ)`.
pub fn ch_gradient_parts(
    ctx: &SpectralContext,
    problem: &ChProblem,
    v: &SpectralField,
    zeta: &SpectralField,
) -> Result<(SpectralField, SpectralField)> {
    require_mean_zero(v)?;
    Ok((smooth_gradient(ctx, problem, v)?.0, zeta.clone()))
}

/// `r̃ = Π₀(f − ζ − v³ + Δv)`
pub fn perturbed_residual(
    ctx: &SpectralContext,
    problem: &ChProblem,
    v: &SpectralField,
    zeta: &SpectralField,
) -> Result<SpectralField> {
    let (mut g, zeta) = ch_gradient_parts(ctx, problem, v, zeta)?;
    g.axpy(1.0, &zeta);
    g.scale(-1.0);
    Ok(mean_zero_project(&g))
}

/// `(Π₀(v³ − Δv − f), ‖∇v‖²)`
fn smooth_gradient(
    ctx: &SpectralContext,
    problem: &ChProblem,
    v: &SpectralField,
) -> Result<(SpectralField, f64)> {
    let grid = ctx.grid();
    let s = ctx.forward(v)?;
    let neg_lap = FourierSymbol::neg_laplacian(grid).apply_spectrum(&s);
    let h1_sq = neg_lap.inner(&s);
    let mut g = ctx.cube(v)?;
    g.axpy(1.0, &ctx.inverse(&neg_lap)?);
    g.axpy(-1.0, &problem.f);
    Ok((mean_zero_project(&g), h1_sq))
}

/// Initial guess of each inner solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WarmStart {
    /// The current outer iterate `v_k`.
    #[default]
    Iterate,
    /// The previous inner solution `ζ_{k−1}`.
    Previous,
    /// Zero.
    Cold,
}

/// Per-iteration parameters of the gradient approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerTheta {
    pub warm_start: WarmStart,
    pub budget: IterationBudget,
}

/// `G = E + F` for a [`ChProblem`] on a given transform context.
pub struct ChObjective<'a> {
    ctx: &'a SpectralContext,
    problem: &'a ChProblem,
    inner: InnerSolver<'a>,
    h1_sq: Cell<f64>,
    last_zeta: Option<SpectralField>,
    last_inner: Option<InnerTrace>,
}

impl<'a> ChObjective<'a> {
    pub fn new(
        ctx: &'a SpectralContext,
        problem: &'a ChProblem,
        strict_inner: bool,
    ) -> Result<Self> {
        Ok(Self {
            ctx,
            problem,
            inner: InnerSolver::new(ctx, &problem.mobility)?.strict(strict_inner),
            h1_sq: Cell::new(0.0),
            last_zeta: None,
            last_inner: None,
        })
    }

    pub fn problem(&self) -> &ChProblem {
        self.problem
    }

    /// Trace of the most recent inner solve.
    pub fn last_inner(&self) -> Option<&InnerTrace> {
        self.last_inner.as_ref()
    }

    /// `G(v)` using `ζ` from the most recent inner solve and `‖∇v‖²` from the
    /// most recent smooth gradient; no transforms are spent.
    pub fn reported_energy(&self, v: &SpectralField, zeta: &SpectralField) -> f64 {
        energy_parts(self.problem, v, zeta, self.h1_sq.get())
    }

    fn rhs(&self, v: &SpectralField) -> SpectralField {
        let mut diff = v.clone();
        diff.axpy(-1.0, &self.problem.u_star);
        mean_zero_project(&diff)
    }

    /// `(−Δ_M)⁻¹(v − u⋆)` to round-off (constant mobility) or to a very tight
    /// inner tolerance.
    pub fn exact_zeta(&self, v: &SpectralField) -> Result<SpectralField> {
        let rhs = self.rhs(v);
        let m = &self.problem.mobility;
        if m.is_constant() {
            let out =
                FourierSymbol::inverse_neg_laplacian(self.ctx.grid()).apply(self.ctx, &rhs)?;
            return Ok(out.map(|x| x / m.mean()));
        }
        let budget = IterationBudget::new(200_000, 1e-13, StopMetric::ResidualNorm)?;
        let solver = InnerSolver::new(self.ctx, m)?;
        let (zeta, trace) = solver.solve(&rhs, &SpectralField::zeros(self.ctx.grid()), budget)?;
        if trace.capped() {
            return Err(Error::InnerCapped {
                iterations: trace.iterations,
            });
        }
        Ok(zeta)
    }
}

impl CompositeObjective<SpectralField> for ChObjective<'_> {
    type Theta = InnerTheta;

    fn smooth_gradient(&self, v: &SpectralField) -> SpectralField {
        let (g, h1_sq) =
            smooth_gradient(self.ctx, self.problem, v).expect("iterate lives on the problem grid");
        self.h1_sq.set(h1_sq);
        g
    }

    fn approx_gradient_f(
        &mut self,
        v: &SpectralField,
        theta: &InnerTheta,
    ) -> Result<SpectralField> {
        let grid = self.ctx.grid();
        let zero = SpectralField::zeros(grid);
        let start = match theta.warm_start {
            WarmStart::Iterate => v,
            WarmStart::Previous => self.last_zeta.as_ref().unwrap_or(&zero),
            WarmStart::Cold => &zero,
        };
        let (zeta, trace) = self.inner.solve(&self.rhs(v), start, theta.budget)?;
        self.last_inner = Some(trace);
        self.last_zeta = Some(zeta.clone());
        Ok(zeta)
    }
}

impl ExactSplit<SpectralField> for ChObjective<'_> {
    fn energy(&self, v: &SpectralField) -> f64 {
        let zeta = self.exact_zeta(v).expect("exact inner solve");
        ch_energy(self.ctx, self.problem, v, &zeta).expect("mean-zero iterate")
    }

    fn exact_gradient_f(&self, v: &SpectralField) -> SpectralField {
        self.exact_zeta(v).expect("exact inner solve")
    }
}

/// Outer-loop settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub sigma: f64,
    pub tol_outer: f64,
    pub tol_inner: f64,
    pub k_hat: usize,
    pub n_0: usize,
    pub outer_metric: StopMetric,
    pub inner_metric: StopMetric,
    pub warm_start: WarmStart,
    pub strict_inner: bool,
    /// Initial iterate; zero when absent.
    pub v0: Option<SpectralField>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            tol_outer: 1e-6,
            tol_inner: 1e-6,
            k_hat: 1000,
            n_0: 1000,
            outer_metric: StopMetric::IncrementSup,
            inner_metric: StopMetric::IncrementSup,
            warm_start: WarmStart::Iterate,
            strict_inner: false,
            v0: None,
        }
    }
}

/// One row per outer iterate `v_k`. Serialized with the trace CSV columns;
/// `increment_sup` and `inner_capped` stay in memory only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub outer_iter: usize,
    /// `‖d̃_k‖_𝓛`
    #[serde(rename = "residual_L_norm")]
    pub residual_l_norm: f64,
    /// `‖σd̃_k‖_∞`
    #[serde(skip)]
    pub increment_sup: f64,
    pub energy: f64,
    /// `G(v_k) − G(v_last)`
    pub energy_gap: f64,
    pub inner_iters: usize,
    #[serde(skip)]
    pub inner_capped: bool,
    pub cumulative_ffts: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct ChSolution {
    pub field: SpectralField,
    pub status: SolveStatus,
    /// Updates applied; the trace has one more row.
    pub updates: usize,
    pub trace: Vec<TraceRecord>,
}

impl ChSolution {
    pub fn total_inner_iters(&self) -> usize {
        self.trace.iter().map(|r| r.inner_iters).sum()
    }

    pub fn total_ffts(&self) -> u64 {
        self.trace.last().map_or(0, |r| r.cumulative_ffts)
    }

    pub fn wall_time_s(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.wall_time_s)
    }
}

/// A failed solve with the trace recorded up to the failure.
#[derive(Debug, thiserror::Error)]
#[error("{source}")]
pub struct SolveFailure {
    #[source]
    pub source: Error,
    pub trace: Vec<TraceRecord>,
}

fn fill_gaps(trace: &mut [TraceRecord]) {
    if let Some(last) = trace.last().map(|r| r.energy) {
        trace
            .iter_mut()
            .for_each(|r| r.energy_gap = r.energy - last);
    }
}

/// The double-loop solver: PPGD outside, PGD for `(−Δ_M)⁻¹` inside.
pub fn ch_ppgd_solve(
    ctx: &SpectralContext,
    problem: &ChProblem,
    config: &SolverConfig,
) -> std::result::Result<ChSolution, SolveFailure> {
    ch_ppgd_solve_observed(ctx, problem, config, |_| {})
}

/// As [`ch_ppgd_solve`], reporting each trace row as it is produced.
pub fn ch_ppgd_solve_observed(
    ctx: &SpectralContext,
    problem: &ChProblem,
    config: &SolverConfig,
    mut observer: impl FnMut(&TraceRecord),
) -> std::result::Result<ChSolution, SolveFailure> {
    let fail = |source: Error| SolveFailure {
        source,
        trace: Vec::new(),
    };
    if problem.grid != ctx.grid() {
        return Err(fail(Error::Shape {
            expected: ctx.grid().len(),
            found: problem.grid.len(),
        }));
    }
    let inner_budget =
        IterationBudget::new(config.n_0, config.tol_inner, config.inner_metric).map_err(fail)?;
    let outer_budget =
        IterationBudget::new(config.k_hat, config.tol_outer, config.outer_metric).map_err(fail)?;
    let precond = SpectralPreconditioner::new(ctx, problem.lambda, problem.gamma).map_err(fail)?;
    let mut objective = ChObjective::new(ctx, problem, config.strict_inner).map_err(fail)?;
    let v0 = match &config.v0 {
        Some(v0) => {
            v0.check_grid(problem.grid).map_err(fail)?;
            mean_zero_project(v0)
        }
        None => SpectralField::zeros(problem.grid),
    };
    let theta = InnerTheta {
        warm_start: config.warm_start,
        budget: inner_budget,
    };

    let start_ffts = ctx.fft_count();
    let start = Instant::now();
    let mut trace = Vec::new();
    let result = ppgd_minimize(
        &mut objective,
        &precond,
        v0,
        StepPolicy::Fixed(config.sigma),
        |_, _| Some(theta),
        outer_budget,
        |info, obj| {
            let inner = obj
                .last_inner()
                .expect("inner solve precedes every iterate");
            let zeta = info.approx_gradient_f.expect("perturbed loop");
            let record = TraceRecord {
                outer_iter: info.index,
                residual_l_norm: info.residual_norm,
                increment_sup: info.increment_sup,
                energy: obj.reported_energy(info.iterate, zeta),
                energy_gap: 0.0,
                inner_iters: inner.iterations,
                inner_capped: inner.capped(),
                cumulative_ffts: ctx.fft_count() - start_ffts,
                wall_time_s: start.elapsed().as_secs_f64(),
            };
            observer(&record);
            trace.push(record);
        },
    );

    fill_gaps(&mut trace);
    match result {
        Ok(min) => Ok(ChSolution {
            field: min.solution,
            status: match min.termination {
                Termination::Converged => SolveStatus::Converged,
                Termination::MaxIters => SolveStatus::MaxIters,
            },
            updates: min.iterations,
            trace,
        }),
        Err(e) => Err(SolveFailure {
            source: match e {
                DescentError::Diverged { iteration, .. } => Error::Diverged {
                    iteration,
                    stage: "outer loop",
                },
                DescentError::Config(msg) => Error::Config(msg),
                DescentError::Approximation { source, .. } => source,
            },
            trace,
        }),
    }
}

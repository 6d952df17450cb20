use std::time::{Duration, Instant};

use nalgebra::DMatrix;
#[cfg(test)]
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dense::{DenseInstance, DenseVector};
use super::inject::{Injection, PerturbationInjector, PerturbedDense};
use crate::descent::{
    dual_trap_constants, invariant_set_thresholds, pgd_minimize_observed, ppgd_minimize,
    DualTrapConstants, IterationBudget, StepPolicy, StopMetric,
};
use crate::{Error, Result};

/// Outcome of one sampling check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub seed: u64,
    /// Pairs or iterations examined.
    pub samples: usize,
    pub violations: usize,
    pub first_violation: Option<usize>,
    /// Smallest `rhs − lhs` seen (negative means a violation beyond tolerance).
    pub worst_slack: f64,
    pub detail: String,
    pub elapsed: Duration,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

struct Tally {
    samples: usize,
    violations: usize,
    first: Option<usize>,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            samples: 0,
            violations: 0,
            first: None,
            worst: f64::INFINITY,
        }
    }

    /// Records `lhs ≤ rhs + tol`.
    fn record(&mut self, index: usize, lhs: f64, rhs: f64, tol: f64) {
        self.samples += 1;
        let slack = rhs - lhs;
        self.worst = self.worst.min(slack);
        if !(slack >= -tol) {
            self.violations += 1;
            self.first.get_or_insert(index);
        }
    }

    fn report(self, name: &str, seed: u64, detail: String, start: Instant) -> CheckReport {
        CheckReport {
            name: name.to_string(),
            seed,
            samples: self.samples,
            violations: self.violations,
            first_violation: self.first,
            worst_slack: self.worst,
            detail,
            elapsed: start.elapsed(),
        }
    }
}

/// Safety factor applied to sampled Lipschitz estimates.
pub const L_HAT_INFLATION: f64 = 1.1;

/// The dual estimates hold with the Lipschitz constant of an enlarged ball
/// `B' ⊃ B`: the auxiliary points `v − L⁻¹(δG(v) − δG(u))/L'` lie within
/// `2r` of `B`, so sampling happens on the ball of radius `3r`.
pub const ENLARGED_BALL_FACTOR: f64 = 3.0;

/// `L̂` for `G − (shift/2)‖·‖²_L` on the ball of radius `radius`: the
/// largest `‖Δg‖²_{L⁻¹}/⟨Δg, Δv⟩` over pairs in the enlarged ball, inflated by
/// [`L_HAT_INFLATION`]. Exact (`λ_max(L⁻¹A) − shift`) for quadratics.
pub fn estimate_l_hat(
    inst: &DenseInstance,
    shift: f64,
    center: &DenseVector,
    radius: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    if inst.beta() == 0.0 {
        return inst.generalized_eigenvalues(inst.a()).max() - shift;
    }
    let l = inst.preconditioner().matrix();
    let radius = radius * ENLARGED_BALL_FACTOR;
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let (u, v) = (
            inst.ball_point(center, radius, rng),
            inst.ball_point(center, radius, rng),
        );
        let w = &v - &u;
        let dg = shifted_gradient_diff(inst, l, shift, &u, &v);
        let pair = dg.dot(&w);
        if pair > 0.0 {
            best = best.max(inst.l_inv_norm(&dg).powi(2) / pair);
        }
    }
    best * L_HAT_INFLATION
}

fn shifted_gradient_diff(
    inst: &DenseInstance,
    l: &DMatrix<f64>,
    shift: f64,
    u: &DenseVector,
    v: &DenseVector,
) -> DenseVector {
    let w = v - u;
    inst.gradient(v) - inst.gradient(u) - l * w * shift
}

/// `G(u) + ⟨δG(u), v−u⟩ + ‖δG(v)−δG(u)‖²_{L⁻¹}/(2L̂) ≤ G(v)` on pairs in the
/// `L`-ball of radius `radius` around the minimizer.
pub fn check_dual_lower_trap(
    inst: &DenseInstance,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u_min = inst.minimizer()?;
    let l_hat = estimate_l_hat(inst, 0.0, &u_min, radius, samples, &mut rng);
    let mut tally = Tally::new();
    for i in 0..samples {
        let (u, v) = (
            inst.ball_point(&u_min, radius, &mut rng),
            inst.ball_point(&u_min, radius, &mut rng),
        );
        let (gu, gv) = (inst.gradient(&u), inst.gradient(&v));
        let lhs = inst.energy(&u)
            + gu.dot(&(&v - &u))
            + inst.l_inv_norm(&(gv - &gu)).powi(2) / (2.0 * l_hat);
        tally.record(i, lhs, inst.energy(&v), 1e-10);
    }
    Ok(tally.report(
        "dual lower trap",
        seed,
        format!("L̂ = {l_hat:.6}, radius {radius}"),
        start,
    ))
}

/// Verifies the dual trap with given constants on pairs in the ball.
pub fn verify_dual_trap(
    inst: &DenseInstance,
    constants: DualTrapConstants,
    center: &DenseVector,
    radius: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> (usize, usize, Option<usize>, f64) {
    let mut tally = Tally::new();
    for i in 0..samples {
        let (u, v) = (
            inst.ball_point(center, radius, rng),
            inst.ball_point(center, radius, rng),
        );
        let w = &v - &u;
        let dg = inst.gradient(&v) - inst.gradient(&u);
        let lhs = dg.dot(&w);
        let rhs = constants.c_flat * inst.l_norm(&w).powi(2)
            + constants.c_sharp * inst.l_inv_norm(&dg).powi(2);
        // lhs ≥ rhs
        tally.record(i, rhs, lhs, 1e-10 * lhs.abs().max(1.0));
    }
    (tally.samples, tally.violations, tally.first, tally.worst)
}

/// `⟨δG(v)−δG(u), v−u⟩ ≥ C♭‖v−u‖²_L + C♯‖δG(v)−δG(u)‖²_{L⁻¹}` with `L̂`
/// taken from `G − (μ/4)‖·‖²_L`.
pub fn check_dual_trap(
    inst: &DenseInstance,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u_min = inst.minimizer()?;
    let mu = inst.mu();
    let l_hat = estimate_l_hat(inst, 0.5 * mu, &u_min, radius, samples, &mut rng);
    let constants = dual_trap_constants(mu, l_hat)?;
    let (n, violations, first, worst) =
        verify_dual_trap(inst, constants, &u_min, radius, samples, &mut rng);
    Ok(CheckReport {
        name: "dual trap".into(),
        seed,
        samples: n,
        violations,
        first_violation: first,
        worst_slack: worst,
        detail: format!(
            "μ = {mu:.6}, L̂ = {l_hat:.6}, C♭ = {:.6}, C♯ = {:.6}",
            constants.c_flat, constants.c_sharp
        ),
        elapsed: start.elapsed(),
    })
}

/// Step and perturbation thresholds for PPGD started at `v0`.
#[derive(Debug, Clone)]
pub struct PpgdThresholds {
    pub minimizer: DenseVector,
    pub d0: f64,
    pub mu: f64,
    pub l_hat: f64,
    pub constants: DualTrapConstants,
    pub sigma0: f64,
    pub eps0: f64,
}

impl PpgdThresholds {
    /// Constants on the ball `‖v − u‖_L ≤ d0` with `d0 = ‖v0 − u‖_L`.
    pub fn estimate(
        inst: &DenseInstance,
        v0: &DenseVector,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        let minimizer = inst.minimizer()?;
        let d0 = inst.l_norm(&(v0 - &minimizer));
        let mu = inst.mu();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l_hat = estimate_l_hat(inst, 0.5 * mu, &minimizer, d0, samples, &mut rng);
        let constants = dual_trap_constants(mu, l_hat)?;
        let set = invariant_set_thresholds(constants.c_flat, constants.c_sharp, d0)?;
        Ok(Self {
            minimizer,
            d0,
            mu,
            l_hat,
            constants,
            sigma0: set.sigma0,
            eps0: set.eps0,
        })
    }

    fn validate(&self, sigma: f64, injection: Injection) -> Result<()> {
        if !(sigma > 0.0 && sigma <= self.sigma0) {
            return Err(Error::Precondition(format!(
                "step {sigma} outside (0, σ₀ = {}]",
                self.sigma0
            )));
        }
        if injection.bound() > self.eps0 * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "perturbation bound {} exceeds ε₀ = {}",
                injection.bound(),
                self.eps0
            )));
        }
        Ok(())
    }

    fn summary(&self, sigma: f64) -> String {
        format!(
            "d0 = {:.4}, μ = {:.4}, L̂ = {:.4}, σ = {sigma:.4} (σ₀ = {:.4}), ε₀ = {:.4e}",
            self.d0, self.mu, self.l_hat, self.sigma0, self.eps0
        )
    }
}

/// `L`-distances `d_k = ‖v_k − u‖_L`, `k = 0..=iters`, of a perturbed run.
pub fn ppgd_distances(
    inst: &DenseInstance,
    thresholds: &PpgdThresholds,
    v0: &DenseVector,
    sigma: f64,
    injector: PerturbationInjector,
    iters: usize,
) -> Result<Vec<f64>> {
    let mut objective = PerturbedDense::new(inst, injector);
    let budget = IterationBudget::new(iters, f64::MIN_POSITIVE, StopMetric::ResidualNorm)?;
    let mut distances = Vec::with_capacity(iters + 1);
    let u = &thresholds.minimizer;
    ppgd_minimize(
        &mut objective,
        inst.preconditioner(),
        v0.clone(),
        StepPolicy::Fixed(sigma),
        |_, _| Some(()),
        budget,
        |info, _| distances.push(inst.l_norm(&(info.iterate - u))),
    )
    .map_err(|e| Error::Precondition(format!("perturbed run failed: {e}")))?;
    Ok(distances)
}

/// Every iterate stays in `{‖v − u‖_L ≤ d0}`.
pub fn check_invariant_set(
    inst: &DenseInstance,
    thresholds: &PpgdThresholds,
    v0: &DenseVector,
    sigma: f64,
    injector: PerturbationInjector,
    iters: usize,
    seed: u64,
) -> Result<CheckReport> {
    let start = Instant::now();
    let mode = injector.mode();
    thresholds.validate(sigma, mode)?;
    let d = ppgd_distances(inst, thresholds, v0, sigma, injector, iters)?;
    let mut tally = Tally::new();
    for (k, dk) in d.iter().enumerate() {
        tally.record(k, *dk, thresholds.d0 * (1.0 + 1e-10), 0.0);
    }
    Ok(tally.report(
        &format!("invariant set ({})", injection_name(mode)),
        seed,
        thresholds.summary(sigma),
        start,
    ))
}

/// `min_{i≤k} d_i² ≤ (d0²/(μσ))ρᵏ + √ε₀·d0` with `ρ = 1 − μσ`, every `k`.
pub fn check_convergence_bound(
    inst: &DenseInstance,
    thresholds: &PpgdThresholds,
    v0: &DenseVector,
    sigma: f64,
    injector: PerturbationInjector,
    iters: usize,
    seed: u64,
) -> Result<CheckReport> {
    let start = Instant::now();
    let mode = injector.mode();
    thresholds.validate(sigma, mode)?;
    let (mu, d0) = (thresholds.mu, thresholds.d0);
    let rho = 1.0 - mu * sigma;
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Precondition(format!("ρ = {rho} outside (0, 1)")));
    }
    let d = ppgd_distances(inst, thresholds, v0, sigma, injector, iters)?;
    let eps = thresholds.eps0.sqrt();
    let mut tally = Tally::new();
    let mut best = f64::INFINITY;
    for (k, dk) in d.iter().enumerate() {
        best = best.min(dk * dk);
        let bound = d0 * d0 / (mu * sigma) * rho.powi(k as i32) + eps * d0;
        tally.record(k, best, bound, 1e-10 * bound);
    }
    Ok(tally.report(
        &format!("convergence bound ({})", injection_name(mode)),
        seed,
        thresholds.summary(sigma),
        start,
    ))
}

/// `d²_{k+1} ≤ (1 − μσ/2) d²_k` under `‖η_k‖² ≤ min{ε₀, μd_k²/(4d0)}`,
/// checked until the distance reaches round-off.
pub fn check_error_free_rate(
    inst: &DenseInstance,
    thresholds: &PpgdThresholds,
    v0: &DenseVector,
    sigma: f64,
    adversarial: bool,
    iters: usize,
    seed: u64,
) -> Result<CheckReport> {
    let start = Instant::now();
    let mode = Injection::Decaying {
        eps0: thresholds.eps0,
        mu: thresholds.mu,
        d0: thresholds.d0,
        adversarial,
    };
    thresholds.validate(sigma, mode)?;
    let injector = PerturbationInjector::new(mode, thresholds.minimizer.clone(), seed);
    let d = ppgd_distances(inst, thresholds, v0, sigma, injector, iters)?;
    let factor = 1.0 - 0.5 * thresholds.mu * sigma;
    let floor = 1e-9 * thresholds.d0.max(1.0);
    let mut tally = Tally::new();
    for (k, w) in d.windows(2).enumerate() {
        if w[0] <= floor {
            break;
        }
        let bound = factor * w[0] * w[0];
        tally.record(k, w[1] * w[1], bound, 1e-10 * bound);
    }
    Ok(tally.report(
        &format!("error-free rate ({})", injection_name(mode)),
        seed,
        thresholds.summary(sigma),
        start,
    ))
}

/// Unperturbed PGD with `σ = 1/L` where `L` bounds the preconditioned
/// Hessian on the ball around the minimizer containing `u0`; checks
/// `‖u_k − u‖_L ≤ ρᵏ‖u0 − u‖_L` with `ρ = 1 − μ/L` and the fitted rate.
pub fn check_pgd_geometric(
    inst: &DenseInstance,
    u0: &DenseVector,
    iters: usize,
    seed: u64,
) -> Result<CheckReport> {
    let start = Instant::now();
    let u = inst.minimizer()?;
    let d0 = inst.l_norm(&(u0 - &u));
    let l_big = hessian_bound(inst, &u, d0);
    let mu = inst.mu();
    let sigma = 1.0 / l_big;
    let rho = 1.0 - mu / l_big;
    let budget = IterationBudget::new(iters, f64::MIN_POSITIVE, StopMetric::ResidualNorm)?;
    let mut d = Vec::new();
    pgd_minimize_observed(
        inst,
        inst.preconditioner(),
        u0.clone(),
        StepPolicy::Fixed(sigma),
        budget,
        |info| d.push(inst.l_norm(&(info.iterate - &u))),
    )
    .map_err(|e| Error::Precondition(format!("PGD run failed: {e}")))?;

    let mut tally = Tally::new();
    for (k, dk) in d.iter().enumerate() {
        let bound = rho.powi(k as i32) * d0;
        tally.record(k, *dk, bound, 1e-12 * d0.max(1.0));
    }
    let fitted = fitted_rate(&d, 1e-10 * d0);
    if let Some(rate) = fitted {
        tally.record(d.len(), rate, rho + 1e-6, 0.0);
    }
    Ok(tally.report(
        "PGD geometric rate",
        seed,
        format!(
            "μ = {mu:.4}, L = {l_big:.4}, ρ = {rho:.6}, fitted = {}",
            fitted.map_or("n/a".into(), |r| format!("{r:.6}"))
        ),
        start,
    ))
}

/// `λ_max(L⁻¹(A + 3βW²I))` with `W` bounding `|v_i|` on the `L`-ball.
pub fn hessian_bound(inst: &DenseInstance, center: &DenseVector, radius: f64) -> f64 {
    let n = inst.dim();
    let l_inv = inst
        .preconditioner()
        .matrix()
        .clone()
        .try_inverse()
        .expect("SPD preconditioner");
    let w = (0..n)
        .map(|i| center[i].abs() + radius * l_inv[(i, i)].sqrt())
        .fold(0.0, f64::max);
    let h = inst.a() + DMatrix::identity(n, n) * (3.0 * inst.beta() * w * w);
    inst.generalized_eigenvalues(&h).max()
}

/// `exp` of the least-squares slope of `log d_k` over the iterates above
/// `floor`.
pub fn fitted_rate(d: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = d
        .iter()
        .enumerate()
        .take_while(|(_, v)| **v > floor)
        .map(|(k, v)| (k as f64, v.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    Some((sxy / sxx).exp())
}

fn injection_name(mode: Injection) -> &'static str {
    match mode {
        Injection::Zero => "zero",
        Injection::Bounded { .. } => "bounded",
        Injection::Adversarial { .. } => "adversarial",
        Injection::Decaying {
            adversarial: true, ..
        } => "decaying, adversarial",
        Injection::Decaying { .. } => "decaying",
    }
}

/// Parameters of the standard check suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub dim: usize,
    pub beta: f64,
    pub radius: f64,
    pub pairs: usize,
    pub iters: usize,
    /// Step as a multiple of `σ₀`; anything above 1 violates the step
    /// precondition and makes the PPGD checks fail.
    pub sigma_scale: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dim: 8,
            beta: 1.0,
            radius: 2.0,
            pairs: 10_000,
            iters: 500,
            sigma_scale: 1.0,
        }
    }
}

/// All checks on one seeded instance, run in parallel. A check that cannot
/// run (violated precondition) is reported as failed with the error as detail.
pub fn run_suite(config: SuiteConfig) -> Result<Vec<CheckReport>> {
    let seed = config.seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = DenseInstance::random(config.dim, config.beta, &mut rng)?;
    let u = inst.minimizer()?;
    let v0 = inst.sphere_point(&u, config.radius, &mut rng);
    let th = PpgdThresholds::estimate(&inst, &v0, config.pairs, seed ^ 0x5eed)?;
    let sigma = th.sigma0 * config.sigma_scale;
    let injector =
        |mode, salt: u64| PerturbationInjector::new(mode, th.minimizer.clone(), seed ^ salt);
    let eps = th.eps0;

    type Job<'a> = Box<dyn Fn() -> Result<CheckReport> + Send + Sync + 'a>;
    let jobs: Vec<Job<'_>> = vec![
        Box::new(|| check_dual_lower_trap(&inst, config.radius, config.pairs, seed)),
        Box::new(|| check_dual_trap(&inst, config.radius, config.pairs, seed.wrapping_add(1))),
        Box::new(|| {
            check_invariant_set(
                &inst,
                &th,
                &v0,
                sigma,
                injector(Injection::Zero, 1),
                config.iters,
                seed,
            )
        }),
        Box::new(|| {
            check_invariant_set(
                &inst,
                &th,
                &v0,
                sigma,
                injector(Injection::Bounded { eps }, 2),
                config.iters,
                seed,
            )
        }),
        Box::new(|| {
            check_invariant_set(
                &inst,
                &th,
                &v0,
                sigma,
                injector(Injection::Adversarial { eps }, 3),
                config.iters,
                seed,
            )
        }),
        Box::new(|| {
            check_convergence_bound(
                &inst,
                &th,
                &v0,
                sigma,
                injector(Injection::Bounded { eps }, 4),
                config.iters,
                seed,
            )
        }),
        Box::new(|| {
            check_convergence_bound(
                &inst,
                &th,
                &v0,
                sigma,
                injector(Injection::Adversarial { eps }, 5),
                config.iters,
                seed,
            )
        }),
        Box::new(|| check_error_free_rate(&inst, &th, &v0, sigma, false, config.iters, seed ^ 6)),
        Box::new(|| check_pgd_geometric(&inst, &v0, config.iters, seed)),
    ];
    const NAMES: [&str; 9] = [
        "dual lower trap",
        "dual trap",
        "invariant set (zero)",
        "invariant set (bounded)",
        "invariant set (adversarial)",
        "convergence bound (bounded)",
        "convergence bound (adversarial)",
        "error-free rate (decaying)",
        "PGD geometric rate",
    ];
    use rayon::prelude::*;
    Ok(jobs
        .par_iter()
        .zip(NAMES)
        .map(|(job, name)| {
            job().unwrap_or_else(|e| CheckReport {
                name: name.to_string(),
                seed,
                samples: 0,
                violations: 1,
                first_violation: None,
                worst_slack: f64::NAN,
                detail: e.to_string(),
                elapsed: Duration::ZERO,
            })
        })
        .collect())
}

//! Generic preconditioned descent loops over an abstract Hilbert space.
//!
//! Dual elements (gradients, residuals) are represented by the same type as
//! primal elements; the pairing `⟨φ, v⟩` is [`HilbertElement::dot`]. A
//! [`Preconditioner`] supplies the working inner product and its inverse.
//!
//! Two loops are provided:
//!
//! * [`pgd_minimize`]: `u_{k+1} = u_k − α_k 𝓛⁻¹ δF(u_k)` with an exact gradient
//!   and either a fixed step or an exact line search.
//! * [`ppgd_minimize`]: `v_{k+1} = v_k − σ 𝓛⁻¹ (δE(v_k) + A(v_k; θ_k))` where
//!   `A(·; θ)` approximates the gradient of the hard part `F` of a composite
//!   objective `G = E + F`.
//!
//! Both loops test the stopping rule on the *proposed* step before applying
//! it, so a start at the minimizer takes zero iterations and the returned
//! iterate is the last one whose increment exceeded the tolerance.

use std::time::{Duration, Instant};

use thiserror::Error;

/// Vector-space element with an ambient pairing.
///
/// Implementations must accumulate `dot` in a fixed order so runs are
/// reproducible bit for bit.
pub trait HilbertElement: Clone {
    /// `self += alpha * x`
    fn axpy(&mut self, alpha: f64, x: &Self);
    fn scale(&mut self, alpha: f64);
    fn dot(&self, other: &Self) -> f64;
    fn sup_norm(&self) -> f64;
    fn is_finite(&self) -> bool;
}

/// Symmetric, coercive and bounded map from elements to dual elements.
pub trait Preconditioner<V: HilbertElement> {
    fn apply(&self, v: &V) -> V;
    fn apply_inverse(&self, phi: &V) -> V;

    /// `(u, v)_𝓛 = ⟨𝓛u, v⟩`
    fn inner(&self, u: &V, v: &V) -> f64 {
        self.apply(u).dot(v)
    }

    /// `(φ, ψ)_{𝓛⁻¹} = ⟨φ, 𝓛⁻¹ψ⟩`
    fn inner_inverse(&self, phi: &V, psi: &V) -> f64 {
        self.apply_inverse(psi).dot(phi)
    }

    fn norm(&self, v: &V) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    fn dual_norm(&self, phi: &V) -> f64 {
        self.inner_inverse(phi, phi).max(0.0).sqrt()
    }
}

/// The Riesz map of the ambient pairing.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl<V: HilbertElement> Preconditioner<V> for IdentityPreconditioner {
    fn apply(&self, v: &V) -> V {
        v.clone()
    }

    fn apply_inverse(&self, phi: &V) -> V {
        phi.clone()
    }
}

/// Objective with an exact gradient, as consumed by [`pgd_minimize`].
pub trait Objective<V> {
    fn energy(&self, v: &V) -> f64;
    fn gradient(&self, v: &V) -> V;

    /// Minimizer over `t` of `energy(v − t·direction)`, where `gradient` is
    /// the gradient at `v`. Only objectives with a closed form (quadratics)
    /// return `Some`.
    fn exact_step(&self, _v: &V, _gradient: &V, _direction: &V) -> Option<f64> {
        None
    }
}

/// Objective split as `G = E + F` where only an approximation of `δF` is
/// affordable in production.
pub trait CompositeObjective<V> {
    /// Solver parameters handed to the approximation at each iteration.
    type Theta;

    /// `δE(v)`
    fn smooth_gradient(&self, v: &V) -> V;

    /// `A(v; θ) ≈ δF(v)`
    fn approx_gradient_f(&mut self, v: &V, theta: &Self::Theta) -> crate::Result<V>;
}

/// Oracle access to the exact pieces of a composite objective.
///
/// Production loops never call into this trait; it exists so tests and
/// theory checks can compare against the unperturbed method.
pub trait ExactSplit<V>: CompositeObjective<V> {
    fn energy(&self, v: &V) -> f64;
    fn exact_gradient_f(&self, v: &V) -> V;
}

/// Presents `δE + δF` of an [`ExactSplit`] as an ordinary [`Objective`].
///
/// The sum is formed in the same order as in [`ppgd_minimize`], so a zero
/// perturbation reproduces PGD bit for bit.
pub struct ExactComposite<'a, O>(pub &'a O);

impl<V: HilbertElement, O: ExactSplit<V>> Objective<V> for ExactComposite<'_, O> {
    fn energy(&self, v: &V) -> f64 {
        self.0.energy(v)
    }

    fn gradient(&self, v: &V) -> V {
        let mut g = self.0.smooth_gradient(v);
        g.axpy(1.0, &self.0.exact_gradient_f(v));
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    Fixed(f64),
    ExactLineSearch,
}

/// Quantity compared against [`IterationBudget::tolerance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopMetric {
    /// Sup norm of the proposed update.
    #[default]
    IncrementSup,
    /// `𝓛⁻¹`-norm of the (possibly perturbed) gradient.
    ResidualNorm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationBudget {
    pub max_iters: usize,
    pub tolerance: f64,
    pub metric: StopMetric,
}

impl IterationBudget {
    pub fn new(max_iters: usize, tolerance: f64, metric: StopMetric) -> crate::Result<Self> {
        if max_iters == 0 {
            return Err(crate::Error::Config(
                "iteration cap must be at least 1".into(),
            ));
        }
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(crate::Error::Config(format!(
                "tolerance must be positive and finite, got {tolerance}"
            )));
        }
        Ok(Self {
            max_iters,
            tolerance,
            metric,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIters,
}

/// Per-iteration diagnostics; entry `k` describes the step proposed at `v_k`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub residual_norms: Vec<f64>,
    pub increment_sups: Vec<f64>,
    pub steps: Vec<f64>,
}

impl IterationTrace {
    fn push(&mut self, residual: f64, increment: f64, step: f64) {
        self.residual_norms.push(residual);
        self.increment_sups.push(increment);
        self.steps.push(step);
    }
}

#[derive(Debug, Clone)]
pub struct Minimized<V> {
    pub solution: V,
    /// Number of updates applied.
    pub iterations: usize,
    pub termination: Termination,
    pub trace: IterationTrace,
}

/// What an observer sees at iteration `index`, before the update is applied.
pub struct IterateInfo<'a, V> {
    pub index: usize,
    pub iterate: &'a V,
    /// Full (possibly perturbed) gradient at the iterate.
    pub gradient: &'a V,
    /// `A(v_k; θ_k)`; `None` for unperturbed PGD.
    pub approx_gradient_f: Option<&'a V>,
    /// `‖gradient‖_{𝓛⁻¹}`, equal to `‖𝓛⁻¹ gradient‖_𝓛`.
    pub residual_norm: f64,
    pub increment_sup: f64,
    pub step: f64,
    pub elapsed: Duration,
}

#[derive(Debug, Error)]
pub enum DescentError<V: std::fmt::Debug> {
    #[error("non-finite value produced at iteration {iteration}")]
    Diverged { iteration: usize, last_finite: V },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("gradient approximation failed at iteration {iteration}: {source}")]
    Approximation {
        iteration: usize,
        #[source]
        source: crate::Error,
    },
}

/// Preconditioned gradient descent with an exact gradient.
pub fn pgd_minimize<V, O, P>(
    objective: &O,
    precond: &P,
    v0: V,
    step: StepPolicy,
    budget: IterationBudget,
) -> Result<Minimized<V>, DescentError<V>>
where
    V: HilbertElement + std::fmt::Debug,
    O: Objective<V>,
    P: Preconditioner<V>,
{
    pgd_minimize_observed(objective, precond, v0, step, budget, |_| {})
}

/// [`pgd_minimize`] with a per-iteration observer.
pub fn pgd_minimize_observed<V, O, P, F>(
    objective: &O,
    precond: &P,
    v0: V,
    step: StepPolicy,
    budget: IterationBudget,
    mut observer: F,
) -> Result<Minimized<V>, DescentError<V>>
where
    V: HilbertElement + std::fmt::Debug,
    O: Objective<V>,
    P: Preconditioner<V>,
    F: FnMut(&IterateInfo<'_, V>),
{
    validate_step(step)?;
    let start = Instant::now();
    let mut v = v0;
    let mut trace = IterationTrace::default();

    for k in 0..=budget.max_iters {
        let g = objective.gradient(&v);
        let p = precond.apply_inverse(&g);
        if !g.is_finite() || !p.is_finite() {
            return Err(DescentError::Diverged {
                iteration: k,
                last_finite: v,
            });
        }
        let residual = g.dot(&p).max(0.0).sqrt();
        let p_sup = p.sup_norm();
        let alpha = match step {
            StepPolicy::Fixed(sigma) => sigma,
            StepPolicy::ExactLineSearch if p_sup == 0.0 => 0.0,
            StepPolicy::ExactLineSearch => objective.exact_step(&v, &g, &p).ok_or_else(|| {
                DescentError::Config("objective has no closed-form line search".into())
            })?,
        };
        let increment = alpha.abs() * p_sup;
        trace.push(residual, increment, alpha);
        observer(&IterateInfo {
            index: k,
            iterate: &v,
            gradient: &g,
            approx_gradient_f: None,
            residual_norm: residual,
            increment_sup: increment,
            step: alpha,
            elapsed: start.elapsed(),
        });

        if metric_value(budget.metric, increment, residual) <= budget.tolerance {
            return Ok(Minimized {
                solution: v,
                iterations: k,
                termination: Termination::Converged,
                trace,
            });
        }
        if k == budget.max_iters {
            break;
        }
        let mut next = v.clone();
        next.axpy(-alpha, &p);
        if !next.is_finite() {
            return Err(DescentError::Diverged {
                iteration: k + 1,
                last_finite: v,
            });
        }
        v = next;
    }

    Ok(Minimized {
        solution: v,
        iterations: budget.max_iters,
        termination: Termination::MaxIters,
        trace,
    })
}

/// Perturbed preconditioned gradient descent with a fixed step `σ`.
///
/// `theta_schedule(k, v_k)` yields the solver parameters for iteration `k`;
/// returning `None` is a configuration error. The exact gradient of `F` is
/// never evaluated.
pub fn ppgd_minimize<V, O, P, S, F>(
    objective: &mut O,
    precond: &P,
    v0: V,
    step: StepPolicy,
    mut theta_schedule: S,
    budget: IterationBudget,
    mut on_iterate: F,
) -> Result<Minimized<V>, DescentError<V>>
where
    V: HilbertElement + std::fmt::Debug,
    O: CompositeObjective<V>,
    P: Preconditioner<V>,
    S: FnMut(usize, &V) -> Option<O::Theta>,
    F: FnMut(&IterateInfo<'_, V>, &O),
{
    let sigma = match step {
        StepPolicy::Fixed(sigma) => sigma,
        StepPolicy::ExactLineSearch => {
            return Err(DescentError::Config(
                "the perturbed method requires a fixed step".into(),
            ))
        }
    };
    validate_step(step)?;
    let start = Instant::now();
    let mut v = v0;
    let mut trace = IterationTrace::default();

    for k in 0..=budget.max_iters {
        let theta = theta_schedule(k, &v).ok_or_else(|| {
            DescentError::Config(format!("no solver parameters supplied for iteration {k}"))
        })?;
        let approx = objective
            .approx_gradient_f(&v, &theta)
            .map_err(|source| match source {
                crate::Error::Diverged { .. } => DescentError::Diverged {
                    iteration: k,
                    last_finite: v.clone(),
                },
                source => DescentError::Approximation {
                    iteration: k,
                    source,
                },
            })?;
        let mut g = objective.smooth_gradient(&v);
        g.axpy(1.0, &approx);
        let p = precond.apply_inverse(&g);
        if !g.is_finite() || !p.is_finite() {
            return Err(DescentError::Diverged {
                iteration: k,
                last_finite: v,
            });
        }
        let residual = g.dot(&p).max(0.0).sqrt();
        let increment = sigma * p.sup_norm();
        trace.push(residual, increment, sigma);
        on_iterate(
            &IterateInfo {
                index: k,
                iterate: &v,
                gradient: &g,
                approx_gradient_f: Some(&approx),
                residual_norm: residual,
                increment_sup: increment,
                step: sigma,
                elapsed: start.elapsed(),
            },
            objective,
        );

        if metric_value(budget.metric, increment, residual) <= budget.tolerance {
            return Ok(Minimized {
                solution: v,
                iterations: k,
                termination: Termination::Converged,
                trace,
            });
        }
        if k == budget.max_iters {
            break;
        }
        let mut next = v.clone();
        next.axpy(-sigma, &p);
        if !next.is_finite() {
            return Err(DescentError::Diverged {
                iteration: k + 1,
                last_finite: v,
            });
        }
        v = next;
    }

    Ok(Minimized {
        solution: v,
        iterations: budget.max_iters,
        termination: Termination::MaxIters,
        trace,
    })
}

fn validate_step<V: std::fmt::Debug>(step: StepPolicy) -> Result<(), DescentError<V>> {
    match step {
        StepPolicy::Fixed(sigma) if !(sigma > 0.0 && sigma.is_finite()) => Err(
            DescentError::Config(format!("step size must be positive, got {sigma}")),
        ),
        _ => Ok(()),
    }
}

fn metric_value(metric: StopMetric, increment: f64, residual: f64) -> f64 {
    match metric {
        StopMetric::IncrementSup => increment,
        StopMetric::ResidualNorm => residual,
    }
}

/// Constants of the two-sided "dual trap" estimate
/// `⟨δG(v)−δG(u), v−u⟩ ≥ c_flat‖v−u‖²_𝓛 + c_sharp‖δG(v)−δG(u)‖²_{𝓛⁻¹}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualTrapConstants {
    pub c_flat: f64,
    pub c_sharp: f64,
}

/// `c_flat = (μ² + 2L̂)/(4L̂ + 4μ)`, `c_sharp = 1/(μ + L̂)`.
pub fn dual_trap_constants(mu: f64, l_hat: f64) -> crate::Result<DualTrapConstants> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(crate::Error::Domain(format!(
            "convexity constant must be positive, got {mu}"
        )));
    }
    // `l_hat` belongs to `G − (μ/4)‖·‖²_𝓛`, which is (μ/2)-strongly convex.
    if !(l_hat >= 0.5 * mu) || !l_hat.is_finite() {
        return Err(crate::Error::Domain(format!(
            "Lipschitz constant {l_hat} cannot undercut half the convexity constant {mu}"
        )));
    }
    Ok(DualTrapConstants {
        c_flat: (mu * mu + 2.0 * l_hat) / (4.0 * l_hat + 4.0 * mu),
        c_sharp: 1.0 / (mu + l_hat),
    })
}

/// Step and perturbation thresholds that keep the iterates in the ball of
/// radius `d0` around the minimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantSet {
    pub sigma0: f64,
    pub eps0: f64,
}

/// `σ₀ = min{c_sharp, 1/c_flat}`, `ε₀ = (1/c_flat + 5c_sharp/4)⁻¹ d0² c_flat`.
pub fn invariant_set_thresholds(c_flat: f64, c_sharp: f64, d0: f64) -> crate::Result<InvariantSet> {
    if !(c_flat > 0.0) || !(c_sharp > 0.0) || !(d0 >= 0.0) {
        return Err(crate::Error::Domain(format!(
            "thresholds need c_flat, c_sharp > 0 and d0 >= 0 (got {c_flat}, {c_sharp}, {d0})"
        )));
    }
    Ok(InvariantSet {
        sigma0: c_sharp.min(1.0 / c_flat),
        eps0: d0 * d0 * c_flat / (1.0 / c_flat + 1.25 * c_sharp),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    struct Vec2([f64; 2]);

    impl HilbertElement for Vec2 {
        fn axpy(&mut self, alpha: f64, x: &Self) {
            self.0[0] += alpha * x.0[0];
            self.0[1] += alpha * x.0[1];
        }
        fn scale(&mut self, alpha: f64) {
            self.0[0] *= alpha;
            self.0[1] *= alpha;
        }
        fn dot(&self, other: &Self) -> f64 {
            self.0[0] * other.0[0] + self.0[1] * other.0[1]
        }
        fn sup_norm(&self) -> f64 {
            self.0[0].abs().max(self.0[1].abs())
        }
        fn is_finite(&self) -> bool {
            self.0.iter().all(|x| x.is_finite())
        }
    }

    /// Diagonal preconditioner diag(1, 4).
    struct Diag;

    impl Preconditioner<Vec2> for Diag {
        fn apply(&self, v: &Vec2) -> Vec2 {
            Vec2([v.0[0], 4.0 * v.0[1]])
        }
        fn apply_inverse(&self, phi: &Vec2) -> Vec2 {
            Vec2([phi.0[0], phi.0[1] / 4.0])
        }
    }

    /// ½‖v‖²_𝓛 for `Diag`.
    struct HalfNormSquared;

    impl Objective<Vec2> for HalfNormSquared {
        fn energy(&self, v: &Vec2) -> f64 {
            0.5 * Diag.inner(v, v)
        }
        fn gradient(&self, v: &Vec2) -> Vec2 {
            Diag.apply(v)
        }
    }

    fn budget() -> IterationBudget {
        IterationBudget::new(50, 1e-12, StopMetric::IncrementSup).unwrap()
    }

    #[test]
    fn unit_step_on_preconditioner_norm_converges_in_one_iteration() {
        let out = pgd_minimize(
            &HalfNormSquared,
            &Diag,
            Vec2([3.0, -2.0]),
            StepPolicy::Fixed(1.0),
            budget(),
        )
        .unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.termination, Termination::Converged);
        assert_eq!(out.solution, Vec2([0.0, 0.0]));
    }

    #[test]
    fn start_at_minimizer_takes_no_steps() {
        let out = pgd_minimize(
            &HalfNormSquared,
            &Diag,
            Vec2([0.0, 0.0]),
            StepPolicy::Fixed(0.5),
            budget(),
        )
        .unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.trace.residual_norms, vec![0.0]);
    }

    #[test]
    fn huge_step_reports_divergence_with_last_finite_iterate() {
        let b = IterationBudget::new(10_000, 1e-12, StopMetric::IncrementSup).unwrap();
        let err = pgd_minimize(
            &HalfNormSquared,
            &Diag,
            Vec2([1.0, 1.0]),
            StepPolicy::Fixed(1e30),
            b,
        )
        .unwrap_err();
        match err {
            DescentError::Diverged { last_finite, .. } => assert!(last_finite.is_finite()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn max_iters_is_reported() {
        let b = IterationBudget::new(3, 1e-300, StopMetric::ResidualNorm).unwrap();
        let out = pgd_minimize(
            &HalfNormSquared,
            &Diag,
            Vec2([1.0, 1.0]),
            StepPolicy::Fixed(0.5),
            b,
        )
        .unwrap();
        assert_eq!(out.termination, Termination::MaxIters);
        assert_eq!(out.iterations, 3);
        assert_eq!(out.trace.residual_norms.len(), 4);
    }

    #[test]
    fn invalid_budget_and_step_are_rejected() {
        assert!(IterationBudget::new(0, 1e-6, StopMetric::IncrementSup).is_err());
        assert!(IterationBudget::new(5, 0.0, StopMetric::IncrementSup).is_err());
        let err = pgd_minimize(
            &HalfNormSquared,
            &Diag,
            Vec2([1.0, 1.0]),
            StepPolicy::Fixed(-1.0),
            budget(),
        )
        .unwrap_err();
        assert!(matches!(err, DescentError::Config(_)));
    }

    #[test]
    fn exact_line_search_without_closed_form_is_a_config_error() {
        let err = pgd_minimize(
            &HalfNormSquared,
            &Diag,
            Vec2([1.0, 1.0]),
            StepPolicy::ExactLineSearch,
            budget(),
        )
        .unwrap_err();
        assert!(matches!(err, DescentError::Config(_)));
    }

    struct Split;

    impl CompositeObjective<Vec2> for Split {
        type Theta = ();
        fn smooth_gradient(&self, v: &Vec2) -> Vec2 {
            Vec2([v.0[0], 0.0])
        }
        fn approx_gradient_f(&mut self, v: &Vec2, _: &()) -> crate::Result<Vec2> {
            Ok(Vec2([0.0, 4.0 * v.0[1]]))
        }
    }

    #[test]
    fn empty_schedule_is_a_config_error() {
        let err = ppgd_minimize(
            &mut Split,
            &Diag,
            Vec2([1.0, 1.0]),
            StepPolicy::Fixed(1.0),
            |_, _| None,
            budget(),
            |_, _| {},
        )
        .unwrap_err();
        assert!(matches!(err, DescentError::Config(_)));
    }

    #[test]
    fn ppgd_rejects_line_search() {
        let err = ppgd_minimize(
            &mut Split,
            &Diag,
            Vec2([1.0, 1.0]),
            StepPolicy::ExactLineSearch,
            |_, _| Some(()),
            budget(),
            |_, _| {},
        )
        .unwrap_err();
        assert!(matches!(err, DescentError::Config(_)));
    }

    #[test]
    fn ppgd_observer_sees_every_iterate() {
        let mut seen = Vec::new();
        let out = ppgd_minimize(
            &mut Split,
            &Diag,
            Vec2([1.0, 1.0]),
            StepPolicy::Fixed(0.5),
            |_, _| Some(()),
            budget(),
            |info, _| seen.push(info.index),
        )
        .unwrap();
        assert_eq!(seen.len(), out.trace.residual_norms.len());
        assert_eq!(seen, (0..seen.len()).collect::<Vec<_>>());
    }

    #[test]
    fn dual_trap_constants_match_hand_values() {
        let c = dual_trap_constants(1.0, 1.0).unwrap();
        assert_eq!((c.c_flat, c.c_sharp), (3.0 / 8.0, 0.5));
        let c = dual_trap_constants(2.0, 6.0).unwrap();
        assert_eq!((c.c_flat, c.c_sharp), (0.5, 0.125));
        let c = dual_trap_constants(1.0, 1e12).unwrap();
        assert!((c.c_flat - 0.5).abs() < 1e-11 && c.c_sharp < 1e-11);
        assert!(dual_trap_constants(2.0, 1.0).is_ok());
        assert!(dual_trap_constants(2.0, 0.9).is_err());
        assert!(dual_trap_constants(0.0, 1.0).is_err());
    }

    #[test]
    fn invariant_set_thresholds_match_hand_values() {
        let t = invariant_set_thresholds(3.0 / 8.0, 0.5, 1.0).unwrap();
        assert_eq!(t.sigma0, 0.5);
        assert!((t.eps0 - 9.0 / 79.0).abs() < 1e-15);
        let t = invariant_set_thresholds(0.5, 0.125, 2.0).unwrap();
        assert_eq!(t.sigma0, 0.125);
        assert!((t.eps0 - 64.0 / 69.0).abs() < 1e-15);
        assert_eq!(invariant_set_thresholds(0.5, 0.125, 0.0).unwrap().eps0, 0.0);
    }
}

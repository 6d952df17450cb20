use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::dense::{DenseInstance, DenseVector};
use crate::descent::{CompositeObjective, Preconditioner};

/// How `η_k` is chosen. All sizes are in `‖·‖²_{L⁻¹}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Injection {
    Zero,
    /// Random direction, `‖η‖² = eps` exactly.
    Bounded {
        eps: f64,
    },
    /// `η = −√eps · L(v − u)/‖v − u‖_L`, pushing the update away from `u`.
    Adversarial {
        eps: f64,
    },
    /// `‖η_k‖² = min{eps0, μ d_k²/(4 d0)}`, random or adversarial direction.
    Decaying {
        eps0: f64,
        mu: f64,
        d0: f64,
        adversarial: bool,
    },
}

impl Injection {
    /// Upper bound on `‖η‖²_{L⁻¹}`.
    pub fn bound(&self) -> f64 {
        match *self {
            Injection::Zero => 0.0,
            Injection::Bounded { eps } | Injection::Adversarial { eps } => eps,
            Injection::Decaying { eps0, .. } => eps0,
        }
    }
}

/// Seeded source of perturbations relative to a known minimizer `u`.
#[derive(Debug, Clone)]
pub struct PerturbationInjector {
    mode: Injection,
    minimizer: DenseVector,
    rng: ChaCha8Rng,
}

impl PerturbationInjector {
    pub fn new(mode: Injection, minimizer: DenseVector, seed: u64) -> Self {
        Self {
            mode,
            minimizer,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn mode(&self) -> Injection {
        self.mode
    }

    pub fn sample(&mut self, inst: &DenseInstance, v: &DenseVector) -> DenseVector {
        let n = inst.dim();
        let w = v - &self.minimizer;
        let d = inst.l_norm(&w);
        let (size_sq, adversarial) = match self.mode {
            Injection::Zero => return DVector::zeros(n),
            Injection::Bounded { eps } => (eps, false),
            Injection::Adversarial { eps } => (eps, true),
            Injection::Decaying {
                eps0,
                mu,
                d0,
                adversarial,
            } => {
                let decay = if d0 > 0.0 {
                    mu * d * d / (4.0 * d0)
                } else {
                    0.0
                };
                (eps0.min(decay), adversarial)
            }
        };
        let size = size_sq.max(0.0).sqrt();
        if size == 0.0 {
            return DVector::zeros(n);
        }
        if adversarial {
            if d == 0.0 {
                return DVector::zeros(n);
            }
            return inst.preconditioner().apply(&w) * (-size / d);
        }
        // ‖Rz‖_{L⁻¹} = ‖z‖ for L = RRᵀ.
        let z = DVector::from_fn(n, |_, _| self.rng.sample::<f64, _>(StandardNormal));
        inst.preconditioner().factor() * &z * (size / z.norm())
    }
}

/// `G` with `δF ≡ 0`, so the approximate gradient of `F` is exactly the
/// injected perturbation.
pub struct PerturbedDense<'a> {
    pub instance: &'a DenseInstance,
    pub injector: PerturbationInjector,
    /// `‖η_k‖²_{L⁻¹}` of every injection so far.
    pub sizes: Vec<f64>,
}

impl<'a> PerturbedDense<'a> {
    pub fn new(instance: &'a DenseInstance, injector: PerturbationInjector) -> Self {
        Self {
            instance,
            injector,
            sizes: Vec::new(),
        }
    }
}

impl CompositeObjective<DenseVector> for PerturbedDense<'_> {
    type Theta = ();

    fn smooth_gradient(&self, v: &DenseVector) -> DenseVector {
        self.instance.gradient(v)
    }

    fn approx_gradient_f(&mut self, v: &DenseVector, _: &()) -> crate::Result<DenseVector> {
        let eta = self.injector.sample(self.instance, v);
        self.sizes.push(self.instance.l_inv_norm(&eta).powi(2));
        Ok(eta)
    }
}

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::descent::{HilbertElement, Objective, Preconditioner};
use crate::{Error, Result};

pub type DenseVector = DVector<f64>;

impl HilbertElement for DenseVector {
    fn axpy(&mut self, alpha: f64, x: &Self) {
        DVector::axpy(self, alpha, x, 1.0);
    }

    fn scale(&mut self, alpha: f64) {
        *self *= alpha;
    }

    fn dot(&self, other: &Self) -> f64 {
        DVector::dot(self, other)
    }

    fn sup_norm(&self) -> f64 {
        self.amax()
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

/// `𝓛 = L` for an SPD matrix `L`.
#[derive(Debug, Clone)]
pub struct DensePreconditioner {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl DensePreconditioner {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let chol = spd_cholesky(&matrix, "preconditioner")?;
        Ok(Self { matrix, chol })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Lower factor `R` with `L = RRᵀ`.
    pub fn factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}

impl Preconditioner<DenseVector> for DensePreconditioner {
    fn apply(&self, v: &DenseVector) -> DenseVector {
        &self.matrix * v
    }

    fn apply_inverse(&self, phi: &DenseVector) -> DenseVector {
        self.chol.solve(phi)
    }
}

fn spd_cholesky(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if !m.is_square() || (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
        return Err(Error::Domain(format!(
            "{what} matrix must be square and symmetric"
        )));
    }
    Cholesky::new(m.clone())
        .ok_or_else(|| Error::Domain(format!("{what} matrix is not positive definite")))
}

/// `G(v) = ½vᵀAv − bᵀv + (β/4)Σv_i⁴` with preconditioner `L`.
#[derive(Debug, Clone)]
pub struct DenseInstance {
    a: DMatrix<f64>,
    b: DenseVector,
    beta: f64,
    precond: DensePreconditioner,
    mu: f64,
}

impl DenseInstance {
    pub fn new(a: DMatrix<f64>, b: DenseVector, beta: f64, l: DMatrix<f64>) -> Result<Self> {
        spd_cholesky(&a, "quadratic")?;
        let precond = DensePreconditioner::new(l)?;
        if b.len() != a.nrows() || precond.matrix.nrows() != a.nrows() {
            return Err(Error::Shape {
                expected: a.nrows(),
                found: b.len(),
            });
        }
        if !(beta >= 0.0) {
            return Err(Error::Domain(format!(
                "quartic weight must be >= 0, got {beta}"
            )));
        }
        let mut inst = Self {
            a,
            b,
            beta,
            precond,
            mu: 0.0,
        };
        inst.mu = inst.generalized_eigenvalues(&inst.a).min();
        Ok(inst)
    }

    /// Random instance with `λ_min(L⁻¹A) ≥ 1`: `A = L + P` with `P` PSD.
    pub fn random(n: usize, beta: f64, rng: &mut ChaCha8Rng) -> Result<Self> {
        let gauss = |rng: &mut ChaCha8Rng| {
            DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal))
        };
        let q = gauss(rng);
        let l = &q * q.transpose() / n as f64 + DMatrix::identity(n, n) * 0.5;
        let c = gauss(rng);
        let a = &l + &c * c.transpose() * (0.25 / n as f64);
        let b = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        Self::new(a, b, beta, l)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DenseVector {
        &self.b
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn preconditioner(&self) -> &DensePreconditioner {
        &self.precond
    }

    /// Strong convexity constant w.r.t. `‖·‖_L`: `λ_min(L⁻¹A)`. The quartic
    /// term is convex, so this bound is global for every `β ≥ 0`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Spectrum of `L⁻¹M` for symmetric `M`.
    pub fn generalized_eigenvalues(&self, m: &DMatrix<f64>) -> DVector<f64> {
        let r = self.precond.factor();
        let r_inv = r
            .clone()
            .try_inverse()
            .expect("Cholesky factor is invertible");
        let s = &r_inv * m * r_inv.transpose();
        SymmetricEigen::new((&s + s.transpose()) * 0.5).eigenvalues
    }

    pub fn energy(&self, v: &DenseVector) -> f64 {
        0.5 * v.dot(&(&self.a * v)) - self.b.dot(v) + 0.25 * self.beta * v.map(|x| x.powi(4)).sum()
    }

    pub fn gradient(&self, v: &DenseVector) -> DenseVector {
        &self.a * v - &self.b + v.map(|x| self.beta * x * x * x)
    }

    pub fn hessian(&self, v: &DenseVector) -> DMatrix<f64> {
        let mut h = self.a.clone();
        for i in 0..v.len() {
            h[(i, i)] += 3.0 * self.beta * v[i] * v[i];
        }
        h
    }

    pub fn l_norm(&self, w: &DenseVector) -> f64 {
        self.precond.norm(w)
    }

    pub fn l_inv_norm(&self, g: &DenseVector) -> f64 {
        self.precond.dual_norm(g)
    }

    /// Point at `L`-distance `radius` from `center` along a Gaussian direction.
    pub fn sphere_point(
        &self,
        center: &DenseVector,
        radius: f64,
        rng: &mut ChaCha8Rng,
    ) -> DenseVector {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let w = self.lower_solve_t(&z);
        center + w * (radius / z.norm())
    }

    /// Uniform sample of the `L`-ball of radius `radius` around `center`.
    pub fn ball_point(
        &self,
        center: &DenseVector,
        radius: f64,
        rng: &mut ChaCha8Rng,
    ) -> DenseVector {
        let scale: f64 = rng.gen::<f64>().powf(1.0 / self.dim() as f64);
        self.sphere_point(center, radius * scale, rng)
    }

    /// `R⁻ᵀz`, which has `‖R⁻ᵀz‖_L = ‖z‖`.
    fn lower_solve_t(&self, z: &DenseVector) -> DenseVector {
        self.precond
            .factor()
            .transpose()
            .solve_upper_triangular(z)
            .expect("Cholesky factor is invertible")
    }

    /// Minimizer by damped Newton with the exact Hessian, to a Newton
    /// decrement of `1e-12` relative to the iterate (or gradient round-off).
    pub fn minimizer(&self) -> Result<DenseVector> {
        let mut v = DVector::zeros(self.dim());
        let noise = 1e-14 * (self.a.norm() + self.b.norm());
        for _ in 0..200 {
            let g = self.gradient(&v);
            let step = Cholesky::new(self.hessian(&v))
                .ok_or_else(|| Error::Domain("Hessian lost definiteness".into()))?
                .solve(&g);
            let scale = v.amax().max(1.0);
            if step.amax() <= 1e-12 * scale || g.norm() <= noise * scale.powi(3) {
                return Ok(v - step);
            }
            let (e0, slope) = (self.energy(&v), g.dot(&step));
            let mut t = 1.0;
            // Below this decrement energy differences drown in round-off and
            // the full Newton step is taken.
            let resolvable = slope > 1e-10 * e0.abs().max(1.0);
            while resolvable && t > 1e-8 && self.energy(&(&v - &step * t)) > e0 - 1e-4 * t * slope {
                t *= 0.5;
            }
            v -= step * t;
        }
        Err(Error::Domain("Newton iteration did not converge".into()))
    }
}

impl Objective<DenseVector> for DenseInstance {
    fn energy(&self, v: &DenseVector) -> f64 {
        DenseInstance::energy(self, v)
    }

    fn gradient(&self, v: &DenseVector) -> DenseVector {
        DenseInstance::gradient(self, v)
    }

    fn exact_step(&self, _v: &DenseVector, g: &DenseVector, p: &DenseVector) -> Option<f64> {
        if self.beta != 0.0 {
            return None;
        }
        let curvature = p.dot(&(&self.a * p));
        (curvature > 0.0).then(|| g.dot(p) / curvature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = DenseInstance::random(8, 1.0, &mut rng).unwrap();
        let v = DVector::from_fn(8, |i, _| (i as f64 * 0.7).sin());
        let g = inst.gradient(&v);
        let h = 1e-5;
        for i in 0..8 {
            let mut e = DVector::zeros(8);
            e[i] = h;
            let fd = (inst.energy(&(&v + &e)) - inst.energy(&(&v - &e))) / (2.0 * h);
            assert!(
                (fd - g[i]).abs() <= 1e-7 * g[i].abs().max(1.0),
                "{i}: {fd} vs {}",
                g[i]
            );
        }
    }

    #[test]
    fn random_instances_have_mu_at_least_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let inst = DenseInstance::random(8, 1.0, &mut rng).unwrap();
            assert!(inst.mu() >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn newton_finds_a_stationary_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inst = DenseInstance::random(8, 1.0, &mut rng).unwrap();
        let u = inst.minimizer().unwrap();
        assert!(inst.gradient(&u).amax() < 1e-11);
    }

    #[test]
    fn non_spd_matrices_are_rejected() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        let l = DMatrix::identity(2, 2);
        assert!(DenseInstance::new(a, DVector::zeros(2), 0.0, l).is_err());
    }

    #[test]
    fn sphere_points_have_the_requested_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let inst = DenseInstance::random(6, 0.0, &mut rng).unwrap();
        let c = DVector::from_element(6, 0.3);
        let p = inst.sphere_point(&c, 2.5, &mut rng);
        assert!((inst.l_norm(&(p - &c)) - 2.5).abs() < 1e-12);
    }
}

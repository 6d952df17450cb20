//! Dense oracles built from closed-form Fourier differentiation matrices,
//! independent of the FFT code paths.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use ppgd::spectral::{Grid, MobilityField, SpectralField};

/// First derivative on `n` periodic points of `[0, ℓ)`; the Nyquist mode is
/// annihilated.
pub fn d1(n: usize, length: f64) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    let scale = 2.0 * PI / length;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        let k = i as i64 - j as i64;
        let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        scale * 0.5 * sign / (k as f64 * h / 2.0).tan()
    })
}

/// Second derivative on `n` periodic points of `[0, ℓ)`, Nyquist included.
pub fn d2(n: usize, length: f64) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    let scale = (2.0 * PI / length).powi(2);
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return scale * (-PI * PI / (3.0 * h * h) - 1.0 / 6.0);
        }
        let k = i as i64 - j as i64;
        let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        scale * -0.5 * sign / (k as f64 * h / 2.0).sin().powi(2)
    })
}

/// `∇·(M∇·)` as `M̄Δ + ∇̃·((M − M̄)∇̃)`, row-major `(i, j) ↦ i n + j`.
pub fn variable_laplacian(grid: Grid, mobility: &[f64]) -> DMatrix<f64> {
    let n = grid.n();
    let eye = DMatrix::<f64>::identity(n, n);
    let (first, second) = (d1(n, grid.length()), d2(n, grid.length()));
    let dx = first.kronecker(&eye);
    let dy = eye.kronecker(&first);
    let lap = second.kronecker(&eye) + eye.kronecker(&second);
    let mean = mobility.iter().sum::<f64>() / mobility.len() as f64;
    let excess = DMatrix::from_diagonal(&DVector::from_iterator(
        mobility.len(),
        mobility.iter().map(|m| m - mean),
    ));
    lap * mean + &dx * &excess * &dx + &dy * &excess * &dy
}

pub fn laplacian(grid: Grid) -> DMatrix<f64> {
    variable_laplacian(grid, &vec![1.0; grid.len()])
}

/// Mean-zero solution of `−∇·(M∇u) = φ` by LU on the operator plus the
/// projector onto constants.
pub fn solve_variable_poisson(mobility: &MobilityField, rhs: &SpectralField) -> SpectralField {
    let grid = rhs.grid();
    let len = grid.len() as f64;
    let a = -variable_laplacian(grid, mobility.samples().values())
        + DMatrix::from_element(grid.len(), grid.len(), 1.0 / len);
    let b = DVector::from_column_slice(rhs.values());
    let u = a
        .lu()
        .solve(&b)
        .expect("regularized operator is invertible");
    let mean = u.sum() / len;
    SpectralField::from_values(grid, u.iter().map(|x| x - mean).collect()).unwrap()
}

pub fn to_vector(f: &SpectralField) -> DVector<f64> {
    DVector::from_column_slice(f.values())
}

/// Deterministic mean-zero smooth-ish random field.
pub fn random_field(grid: Grid, seed: u64) -> SpectralField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.gen_range(1..4) as f64,
                rng.gen_range(0..4) as f64,
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let w = 2.0 * PI / grid.length();
    let f = SpectralField::from_fn(grid, |x, y| {
        modes
            .iter()
            .map(|(a, b, c, p)| c * (w * (a * x + b * y) + p).sin())
            .sum()
    });
    let mean = f.mean();
    f.map(|v| v - mean)
}

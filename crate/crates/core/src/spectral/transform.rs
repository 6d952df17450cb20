use std::cell::Cell;
use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::spectral::{Grid, SpectralField};
use crate::{Error, Result};

/// Treatment of pointwise products of fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dealias {
    /// Multiply collocation values directly.
    #[default]
    None,
    /// Zero-pad to a `3n/2` grid, multiply there and truncate back.
    ThreeHalves,
}

/// What inverse symbols do with the mean (zero) mode of their input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroModePolicy {
    /// Drop the mean, i.e. compose with the mean-zero projection.
    #[default]
    Project,
    /// Reject inputs whose mean is not zero to round-off.
    Strict,
}

/// Relative tolerance used to decide that a field is mean-zero.
pub const MEAN_ZERO_TOLERANCE: f64 = 1e-12;

/// Monotone count of 2D transforms performed within one context.
#[derive(Debug, Default)]
pub struct FftCounter(Cell<u64>);

impl FftCounter {
    pub fn get(&self) -> u64 {
        self.0.get()
    }

    fn bump(&self) {
        self.0.set(self.0.get() + 1);
    }
}

/// Normalized Fourier coefficients of a real field on the half spectrum.
///
/// Entry `(p, q)` holds `ĉ(k₁, k₂)` with `k₁ = grid.wavenumber(p)` and
/// `k₂ = q ∈ [0, n/2]`, normalized so that `f(x) = Σ_k ĉ_k e^{i k·x}`: a
/// constant field `c` has a single zero mode equal to `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n() * grid.half()],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of the mode with integer wavenumbers `(k1, k2)`.
    pub fn mode(&self, k1: i64, k2: i64) -> Complex64 {
        let n = self.grid.n() as i64;
        let half = self.grid.half();
        let wrap = |k: i64| k.rem_euclid(n) as usize;
        if k2 >= 0 && (k2 as usize) < half {
            self.coeffs[wrap(k1) * half + k2 as usize]
        } else if k2 < 0 && ((-k2) as usize) < half {
            self.coeffs[wrap(-k1) * half + (-k2) as usize].conj()
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Multiplicity of half-spectrum column `q` in the full spectrum.
    pub(crate) fn column_weight(&self, q: usize) -> f64 {
        if q == 0 || q == self.grid.n() / 2 {
            1.0
        } else {
            2.0
        }
    }

    /// `ℓ² Σ_k m(k) Re(a_k conj(b_k))` over the full spectrum.
    pub fn weighted_inner(&self, other: &Spectrum, weight: impl Fn(usize, usize) -> f64) -> f64 {
        let half = self.grid.half();
        let mut s = 0.0;
        for (idx, (a, b)) in self.coeffs.iter().zip(&other.coeffs).enumerate() {
            let (p, q) = (idx / half, idx % half);
            let w = weight(p, q);
            if w != 0.0 {
                s += self.column_weight(q) * w * (a.re * b.re + a.im * b.im);
            }
        }
        let l = self.grid.length();
        l * l * s
    }

    /// `L²` inner product through Parseval.
    pub fn inner(&self, other: &Spectrum) -> f64 {
        self.weighted_inner(other, |_, _| 1.0)
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Spectrum) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * alpha;
        }
    }

    pub fn zero_mean_mode(&mut self) {
        self.coeffs[0] = Complex64::new(0.0, 0.0);
    }

    pub fn mean_mode(&self) -> f64 {
        self.coeffs[0].re
    }
}

struct Plans {
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(n: usize) -> Self {
        let mut real = RealFftPlanner::<f64>::new();
        let mut complex = FftPlanner::<f64>::new();
        Self {
            n,
            r2c: real.plan_fft_forward(n),
            c2r: real.plan_fft_inverse(n),
            col_fwd: complex.plan_fft_forward(n),
            col_inv: complex.plan_fft_inverse(n),
        }
    }

    /// Normalized half-spectrum, layout `p * half + q`.
    fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let n = self.n;
        let half = n / 2 + 1;
        let zero = Complex64::new(0.0, 0.0);
        let mut row_in = vec![0.0; n];
        let mut row_out = vec![zero; half];
        // Column-major staging: entry (q, i) at q * n + i.
        let mut staged = vec![zero; half * n];
        for i in 0..n {
            row_in.copy_from_slice(&values[i * n..(i + 1) * n]);
            self.r2c
                .process(&mut row_in, &mut row_out)
                .expect("buffer sizes match the plan");
            for q in 0..half {
                staged[q * n + i] = row_out[q];
            }
        }
        self.col_fwd.process(&mut staged);
        let scale = 1.0 / (n * n) as f64;
        let mut out = vec![zero; n * half];
        for q in 0..half {
            for p in 0..n {
                out[p * half + q] = staged[q * n + p] * scale;
            }
        }
        out
    }

    fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let n = self.n;
        let half = n / 2 + 1;
        let zero = Complex64::new(0.0, 0.0);
        let mut staged = vec![zero; half * n];
        for p in 0..n {
            for q in 0..half {
                staged[q * n + p] = coeffs[p * half + q];
            }
        }
        self.col_inv.process(&mut staged);
        let mut row_in = vec![zero; half];
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for q in 0..half {
                row_in[q] = staged[q * n + i];
            }
            // The self-conjugate columns are real up to round-off.
            row_in[0].im = 0.0;
            row_in[half - 1].im = 0.0;
            self.c2r
                .process(&mut row_in, &mut out[i * n..(i + 1) * n])
                .expect("buffer sizes match the plan");
        }
        out
    }
}

/// Transform plans, dealiasing scratch grid and the FFT counter for one solve.
///
/// A context is owned by one solve at a time; concurrent solves each build
/// their own.
pub struct SpectralContext {
    grid: Grid,
    plans: Plans,
    fine: Option<(Grid, Plans)>,
    dealias: Dealias,
    zero_mode: ZeroModePolicy,
    counter: FftCounter,
}

impl std::fmt::Debug for SpectralContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralContext")
            .field("grid", &self.grid)
            .field("dealias", &self.dealias)
            .field("zero_mode", &self.zero_mode)
            .field("ffts", &self.counter.get())
            .finish()
    }
}

impl SpectralContext {
    pub fn new(grid: Grid) -> Self {
        Self::with_options(grid, Dealias::None, ZeroModePolicy::Project)
    }

    pub fn with_options(grid: Grid, dealias: Dealias, zero_mode: ZeroModePolicy) -> Self {
        let fine = match dealias {
            Dealias::None => None,
            Dealias::ThreeHalves => {
                let m = 3 * grid.n() / 2;
                // Fine grids are internal and need not be powers of two.
                let fine_grid = Grid::unchecked(m, grid.length());
                Some((fine_grid, Plans::new(m)))
            }
        };
        Self {
            grid,
            plans: Plans::new(grid.n()),
            fine,
            dealias,
            zero_mode,
            counter: FftCounter::default(),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dealias(&self) -> Dealias {
        self.dealias
    }

    pub fn zero_mode_policy(&self) -> ZeroModePolicy {
        self.zero_mode
    }

    /// Transforms performed so far (forward and inverse each count one).
    pub fn fft_count(&self) -> u64 {
        self.counter.get()
    }

    pub fn forward(&self, field: &SpectralField) -> Result<Spectrum> {
        field.check_grid(self.grid)?;
        self.counter.bump();
        Ok(Spectrum {
            grid: self.grid,
            coeffs: self.plans.forward(field.values()),
        })
    }

    pub fn inverse(&self, spectrum: &Spectrum) -> Result<SpectralField> {
        if spectrum.grid != self.grid {
            return Err(Error::Shape {
                expected: self.grid.len(),
                found: spectrum.grid.len(),
            });
        }
        self.counter.bump();
        SpectralField::from_values(self.grid, self.plans.inverse(&spectrum.coeffs))
    }

    /// Fails under [`ZeroModePolicy::Strict`] when `field` has a nonzero mean.
    pub fn require_mean_zero(&self, field: &SpectralField, what: &str) -> Result<()> {
        if self.zero_mode == ZeroModePolicy::Strict && !is_mean_zero(field) {
            return Err(Error::Precondition(format!(
                "{what} requires mean-zero data (mean = {:e})",
                field.mean()
            )));
        }
        Ok(())
    }

    /// Pointwise product of `weight` with the field whose spectrum is `g`,
    /// returned as a spectrum. With dealiasing the product is formed on the
    /// padded grid from `weight_fine`, the padded samples of `weight`.
    pub(crate) fn weighted_product(
        &self,
        weight: &[f64],
        weight_fine: Option<&[f64]>,
        g: &Spectrum,
    ) -> Spectrum {
        match (&self.fine, weight_fine) {
            (Some((fine_grid, plans)), Some(wf)) => {
                let padded = pad(g, *fine_grid);
                self.counter.bump();
                let mut values = plans.inverse(&padded.coeffs);
                values.iter_mut().zip(wf).for_each(|(v, w)| *v *= w);
                self.counter.bump();
                let prod = Spectrum {
                    grid: *fine_grid,
                    coeffs: plans.forward(&values),
                };
                truncate(&prod, self.grid)
            }
            _ => {
                self.counter.bump();
                let mut values = self.plans.inverse(&g.coeffs);
                values.iter_mut().zip(weight).for_each(|(v, w)| *v *= w);
                self.counter.bump();
                Spectrum {
                    grid: self.grid,
                    coeffs: self.plans.forward(&values),
                }
            }
        }
    }

    /// Samples of `field` on the padded grid, when dealiasing is enabled.
    pub(crate) fn to_fine(&self, field: &SpectralField) -> Result<Option<Vec<f64>>> {
        match &self.fine {
            None => Ok(None),
            Some((fine_grid, plans)) => {
                let s = self.forward(field)?;
                let padded = pad(&s, *fine_grid);
                self.counter.bump();
                Ok(Some(plans.inverse(&padded.coeffs)))
            }
        }
    }

    /// Pointwise cube `v³`, dealiased when configured.
    pub fn cube(&self, field: &SpectralField) -> Result<SpectralField> {
        field.check_grid(self.grid)?;
        match &self.fine {
            None => Ok(field.map(|v| v * v * v)),
            Some((fine_grid, plans)) => {
                let s = self.forward(field)?;
                let padded = pad(&s, *fine_grid);
                self.counter.bump();
                let mut values = plans.inverse(&padded.coeffs);
                values.iter_mut().for_each(|v| *v = *v * *v * *v);
                self.counter.bump();
                let prod = Spectrum {
                    grid: *fine_grid,
                    coeffs: plans.forward(&values),
                };
                self.inverse(&truncate(&prod, self.grid))
            }
        }
    }
}

pub(crate) fn is_mean_zero(field: &SpectralField) -> bool {
    use crate::descent::HilbertElement;
    let scale = field.sup_norm();
    field.mean().abs() <= MEAN_ZERO_TOLERANCE * scale.max(f64::MIN_POSITIVE)
}

/// Copies the resolved modes of `s` (Nyquist excluded) onto a finer grid.
fn pad(s: &Spectrum, fine: Grid) -> Spectrum {
    let n = s.grid.n();
    let (half, fine_half) = (s.grid.half(), fine.half());
    let mut out = Spectrum::zeros(fine);
    for p in 0..n {
        let k1 = s.grid.wavenumber(p);
        if k1.unsigned_abs() as usize == n / 2 {
            continue;
        }
        let fp = k1.rem_euclid(fine.n() as i64) as usize;
        for q in 0..n / 2 {
            out.coeffs[fp * fine_half + q] = s.coeffs[p * half + q];
        }
    }
    out
}

/// Inverse of [`pad`]: keeps the coarse-grid modes, Nyquist zeroed.
fn truncate(s: &Spectrum, coarse: Grid) -> Spectrum {
    let n = coarse.n();
    let (half, fine_half) = (coarse.half(), s.grid.half());
    let mut out = Spectrum::zeros(coarse);
    for p in 0..n {
        let k1 = coarse.wavenumber(p);
        if k1.unsigned_abs() as usize == n / 2 {
            continue;
        }
        let fp = k1.rem_euclid(s.grid.n() as i64) as usize;
        for q in 0..n / 2 {
            out.coeffs[p * half + q] = s.coeffs[fp * fine_half + q];
        }
    }
    out
}

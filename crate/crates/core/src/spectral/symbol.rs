//! Diagonal Fourier multipliers.
//!
//! Second-order symbols use the full wavenumber `|k|²`, including the
//! Nyquist rows. First derivatives zero their own Nyquist row so they map
//! real fields to real fields.

use rustfft::num_complex::Complex64;

use crate::descent::Preconditioner;
use crate::spectral::{Grid, SpectralContext, SpectralField, Spectrum};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Per-mode multiplier table on the half spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSymbol {
    grid: Grid,
    multipliers: Vec<Complex64>,
    /// The symbol has no value at the zero mode; it is applied as zero there
    /// and the operator is defined on mean-zero data only.
    zero_mode_undefined: bool,
}

impl FourierSymbol {
    /// Builds a real symbol from `m(|k|²)` where `|k|²` is in physical units.
    fn from_k_squared(grid: Grid, zero_mode_undefined: bool, m: impl Fn(f64) -> f64) -> Self {
        let unit = grid.frequency_unit();
        let mut multipliers = Vec::with_capacity(grid.n() * grid.half());
        for p in 0..grid.n() {
            let k1 = grid.wavenumber(p) as f64 * unit;
            for q in 0..grid.half() {
                let k2 = q as f64 * unit;
                let value = if p == 0 && q == 0 && zero_mode_undefined {
                    0.0
                } else {
                    m(k1 * k1 + k2 * k2)
                };
                multipliers.push(Complex64::new(value, 0.0));
            }
        }
        Self {
            grid,
            multipliers,
            zero_mode_undefined,
        }
    }

    /// `−Δ`, symbol `|k|²`.
    pub fn neg_laplacian(grid: Grid) -> Self {
        Self::from_k_squared(grid, false, |k2| k2)
    }

    /// `Δ`, symbol `−|k|²`.
    pub fn laplacian(grid: Grid) -> Self {
        Self::from_k_squared(grid, false, |k2| -k2)
    }

    /// `(−Δ)⁻¹` on mean-zero data, symbol `1/|k|²`.
    pub fn inverse_neg_laplacian(grid: Grid) -> Self {
        Self::from_k_squared(grid, true, |k2| 1.0 / k2)
    }

    /// `𝓛 = λ(−Δ)⁻¹ + γ − Δ`, symbol `λ/|k|² + γ + |k|²`.
    pub fn preconditioner(grid: Grid, lambda: f64, gamma: f64) -> Self {
        Self::from_k_squared(grid, true, |k2| lambda / k2 + gamma + k2)
    }

    /// `𝓛⁻¹`.
    pub fn inverse_preconditioner(grid: Grid, lambda: f64, gamma: f64) -> Self {
        Self::from_k_squared(grid, true, |k2| 1.0 / (lambda / k2 + gamma + k2))
    }

    /// `∂/∂x` or `∂/∂y`, symbol `i k_axis`, Nyquist row of that axis zeroed.
    pub fn derivative(grid: Grid, axis: Axis) -> Self {
        let unit = grid.frequency_unit();
        let n = grid.n();
        let mut multipliers = Vec::with_capacity(n * grid.half());
        for p in 0..n {
            for q in 0..grid.half() {
                let k = match axis {
                    Axis::X if p == n / 2 => 0.0,
                    Axis::X => grid.wavenumber(p) as f64,
                    Axis::Y if q == n / 2 => 0.0,
                    Axis::Y => q as f64,
                };
                multipliers.push(Complex64::new(0.0, k * unit));
            }
        }
        Self {
            grid,
            multipliers,
            zero_mode_undefined: false,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn multipliers(&self) -> &[Complex64] {
        &self.multipliers
    }

    pub fn zero_mode_undefined(&self) -> bool {
        self.zero_mode_undefined
    }

    /// Multiplies `s` mode by mode.
    pub fn apply_spectrum(&self, s: &Spectrum) -> Spectrum {
        let mut out = s.clone();
        for (c, m) in out.coeffs_mut().iter_mut().zip(&self.multipliers) {
            *c *= m;
        }
        out
    }

    /// Applies the symbol to a real field (two transforms).
    pub fn apply(&self, ctx: &SpectralContext, field: &SpectralField) -> Result<SpectralField> {
        if self.zero_mode_undefined {
            ctx.require_mean_zero(field, "an inverse symbol")?;
        }
        let s = ctx.forward(field)?;
        ctx.inverse(&self.apply_spectrum(&s))
    }
}

/// The constant-coefficient preconditioner `𝓛 = λ(−Δ)⁻¹ + γ − Δ` acting on
/// mean-zero fields; the mean of any input is discarded.
#[derive(Debug)]
pub struct SpectralPreconditioner<'ctx> {
    ctx: &'ctx SpectralContext,
    lambda: f64,
    gamma: f64,
    forward: FourierSymbol,
    inverse: FourierSymbol,
}

impl<'ctx> SpectralPreconditioner<'ctx> {
    pub fn new(ctx: &'ctx SpectralContext, lambda: f64, gamma: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) || !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(crate::Error::Config(format!(
                "preconditioner needs lambda > 0 and gamma >= 0 (got {lambda}, {gamma})"
            )));
        }
        let grid = ctx.grid();
        Ok(Self {
            ctx,
            lambda,
            gamma,
            forward: FourierSymbol::preconditioner(grid, lambda, gamma),
            inverse: FourierSymbol::inverse_preconditioner(grid, lambda, gamma),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn symbol(&self) -> &FourierSymbol {
        &self.forward
    }

    pub fn inverse_symbol(&self) -> &FourierSymbol {
        &self.inverse
    }

    fn map(&self, symbol: &FourierSymbol, v: &SpectralField) -> SpectralField {
        let s = self
            .ctx
            .forward(v)
            .expect("field lives on the context grid");
        self.ctx
            .inverse(&symbol.apply_spectrum(&s))
            .expect("spectrum lives on the context grid")
    }
}

impl Preconditioner<SpectralField> for SpectralPreconditioner<'_> {
    fn apply(&self, v: &SpectralField) -> SpectralField {
        self.map(&self.forward, v)
    }

    fn apply_inverse(&self, phi: &SpectralField) -> SpectralField {
        self.map(&self.inverse, phi)
    }

    /// Evaluated in coefficient space (one transform per argument).
    fn inner(&self, u: &SpectralField, v: &SpectralField) -> f64 {
        let (a, b) = (self.ctx.forward(u).unwrap(), self.ctx.forward(v).unwrap());
        let m = &self.forward.multipliers;
        let half = self.ctx.grid().half();
        a.weighted_inner(&b, |p, q| m[p * half + q].re)
    }

    fn inner_inverse(&self, phi: &SpectralField, psi: &SpectralField) -> f64 {
        let (a, b) = (
            self.ctx.forward(phi).unwrap(),
            self.ctx.forward(psi).unwrap(),
        );
        let m = &self.inverse.multipliers;
        let half = self.ctx.grid().half();
        a.weighted_inner(&b, |p, q| m[p * half + q].re)
    }
}

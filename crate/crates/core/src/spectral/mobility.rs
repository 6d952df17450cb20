use crate::descent::HilbertElement;
use crate::spectral::{Axis, FourierSymbol, SpectralContext, SpectralField, Spectrum};
use crate::{Error, Result};

/// Pointwise mobility samples `M(x_ij) > 0` with declared bounds
/// `M₁ ≤ M ≤ M₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityField {
    samples: SpectralField,
    lower: f64,
    upper: f64,
    mean: f64,
}

impl MobilityField {
    /// Bounds are taken from the sample extrema.
    pub fn new(samples: SpectralField) -> Result<Self> {
        let (lo, hi) = (samples.min(), samples.max());
        Self::with_bounds(samples, lo, hi)
    }

    /// Declared bounds must enclose every sample.
    pub fn with_bounds(samples: SpectralField, lower: f64, upper: f64) -> Result<Self> {
        if !samples.is_finite() {
            return Err(Error::Domain("mobility has non-finite samples".into()));
        }
        let (lo, hi) = (samples.min(), samples.max());
        if !(lo > 0.0) {
            return Err(Error::Domain(format!(
                "mobility must be strictly positive (min sample {lo})"
            )));
        }
        let slack = 1e-12 * hi;
        if !(lower > 0.0) || lower > lo + slack || upper < hi - slack || lower > upper {
            return Err(Error::Domain(format!(
                "declared bounds [{lower}, {upper}] do not enclose samples [{lo}, {hi}]"
            )));
        }
        let mean = samples.mean();
        Ok(Self {
            samples,
            lower,
            upper,
            mean,
        })
    }

    pub fn constant(grid: crate::spectral::Grid, value: f64) -> Result<Self> {
        Self::new(SpectralField::constant(grid, value))
    }

    pub fn samples(&self) -> &SpectralField {
        &self.samples
    }

    /// `M₁`
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// `M₂`
    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `κ = M₂/M₁`
    pub fn ratio(&self) -> f64 {
        self.upper / self.lower
    }

    pub fn is_constant(&self) -> bool {
        self.samples.values().iter().all(|&m| m == self.mean)
    }
}

/// `Δ_M v = ∇·(M∇v)` prepared for repeated application.
///
/// The mobility is split as `M = M̄ + (M − M̄)` with `M̄` its mean. The
/// constant part acts through the exact Laplacian symbol, the remainder
/// through gradient → pointwise product → divergence. This keeps
/// `Δ_M = M̄Δ` exactly for constant mobility, including the Nyquist modes
/// that first derivatives cannot represent, and the operator stays
/// symmetric with `M₁‖∇v‖² ≤ (−Δ_M v, v) ≤ M₂‖∇v‖²`.
#[derive(Debug)]
pub struct VariableLaplacian<'ctx> {
    ctx: &'ctx SpectralContext,
    mean: f64,
    excess: Option<Vec<f64>>,
    excess_fine: Option<Vec<f64>>,
    laplacian: FourierSymbol,
    dx: FourierSymbol,
    dy: FourierSymbol,
}

impl<'ctx> VariableLaplacian<'ctx> {
    pub fn new(ctx: &'ctx SpectralContext, mobility: &MobilityField) -> Result<Self> {
        let grid = ctx.grid();
        mobility.samples().check_grid(grid)?;
        let mean = mobility.mean();
        let (excess, excess_fine) = if mobility.is_constant() {
            (None, None)
        } else {
            let field = mobility.samples().map(|m| m - mean);
            let fine = ctx.to_fine(&field)?;
            (Some(field.into_values()), fine)
        };
        Ok(Self {
            ctx,
            mean,
            excess,
            excess_fine,
            laplacian: FourierSymbol::laplacian(grid),
            dx: FourierSymbol::derivative(grid, Axis::X),
            dy: FourierSymbol::derivative(grid, Axis::Y),
        })
    }

    pub fn context(&self) -> &'ctx SpectralContext {
        self.ctx
    }

    /// `Δ_M` on coefficients; the mean mode of the result is zeroed.
    pub fn apply_spectrum(&self, v: &Spectrum) -> Spectrum {
        let mut out = self.laplacian.apply_spectrum(v);
        out.coeffs_mut().iter_mut().for_each(|c| *c *= self.mean);
        if let Some(excess) = &self.excess {
            for d in [&self.dx, &self.dy] {
                let grad = d.apply_spectrum(v);
                let flux = self
                    .ctx
                    .weighted_product(excess, self.excess_fine.as_deref(), &grad);
                out.axpy(1.0, &d.apply_spectrum(&flux));
            }
        }
        out.zero_mean_mode();
        out
    }

    pub fn apply(&self, v: &SpectralField) -> Result<SpectralField> {
        let s = self.ctx.forward(v)?;
        self.ctx.inverse(&self.apply_spectrum(&s))
    }

    /// `(M∇u, ∇w)` for fields given by their coefficients.
    pub fn bilinear(&self, u: &Spectrum, w: &Spectrum) -> f64 {
        let grid = self.ctx.grid();
        let unit = grid.frequency_unit();
        let k2 = |p: usize, q: usize| {
            let k1 = grid.wavenumber(p) as f64 * unit;
            let k2 = q as f64 * unit;
            k1 * k1 + k2 * k2
        };
        let constant_part = self.mean * u.weighted_inner(w, k2);
        match (&self.excess, &self.excess_fine) {
            (None, _) => constant_part,
            (Some(excess), None) => {
                let h = grid.spacing();
                let mut s = 0.0;
                for d in [&self.dx, &self.dy] {
                    let gu = self.ctx.inverse(&d.apply_spectrum(u)).unwrap();
                    let gw = if std::ptr::eq(u, w) {
                        gu.clone()
                    } else {
                        self.ctx.inverse(&d.apply_spectrum(w)).unwrap()
                    };
                    s += gu
                        .values()
                        .iter()
                        .zip(gw.values())
                        .zip(excess)
                        .map(|((a, b), m)| m * a * b)
                        .sum::<f64>();
                }
                constant_part + h * h * s
            }
            // With dealiasing the form is evaluated through the operator so
            // it matches the padded products exactly.
            (Some(_), Some(_)) => -self.apply_spectrum(u).inner(w),
        }
    }
}

/// One-shot `∇·(M∇v)`.
pub fn variable_laplacian(
    ctx: &SpectralContext,
    mobility: &MobilityField,
    field: &SpectralField,
) -> Result<SpectralField> {
    VariableLaplacian::new(ctx, mobility)?.apply(field)
}

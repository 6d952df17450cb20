//! Projections and norms on periodic fields.
//!
//! `L²`, `H̊¹` and the dual norms are evaluated by Parseval in coefficient
//! space; `L⁴` by the rectangle rule on collocation values.

use crate::spectral::{SpectralContext, SpectralField, Spectrum};
use crate::Result;

/// `Π₀ f = f − ⟨f⟩`
pub fn mean_zero_project(field: &SpectralField) -> SpectralField {
    let mean = field.mean();
    field.map(|v| v - mean)
}

fn k_squared(s: &Spectrum) -> impl Fn(usize, usize) -> f64 + '_ {
    let grid = s.grid();
    let unit = grid.frequency_unit();
    move |p, q| {
        let k1 = grid.wavenumber(p) as f64 * unit;
        let k2 = q as f64 * unit;
        k1 * k1 + k2 * k2
    }
}

fn k_squared_inverse(s: &Spectrum) -> impl Fn(usize, usize) -> f64 + '_ {
    let k2 = k_squared(s);
    move |p, q| {
        if p == 0 && q == 0 {
            0.0
        } else {
            1.0 / k2(p, q)
        }
    }
}

impl SpectralContext {
    pub fn l2_norm(&self, f: &SpectralField) -> Result<f64> {
        let s = self.forward(f)?;
        Ok(s.inner(&s).max(0.0).sqrt())
    }

    /// `(h² Σ f⁴)^{1/4}`
    pub fn l4_norm(&self, f: &SpectralField) -> Result<f64> {
        f.check_grid(self.grid())?;
        Ok(l4_norm_pow4(f).powf(0.25))
    }

    /// `‖∇f‖_{L²}`
    pub fn h1_seminorm(&self, f: &SpectralField) -> Result<f64> {
        let s = self.forward(f)?;
        Ok(s.weighted_inner(&s, k_squared(&s)).max(0.0).sqrt())
    }

    /// `sup ⟨f, v⟩ / ‖∇v‖`, i.e. `(Σ |f̂_k|²/|k|²)^{1/2}` scaled by `ℓ`.
    pub fn hm1_norm(&self, f: &SpectralField) -> Result<f64> {
        self.require_mean_zero(f, "the H^-1 norm")?;
        let s = self.forward(f)?;
        Ok(s.weighted_inner(&s, k_squared_inverse(&s)).max(0.0).sqrt())
    }

    /// `‖f‖_𝓛` with `𝓛 = λ(−Δ)⁻¹ + γ − Δ`.
    pub fn preconditioner_norm(&self, f: &SpectralField, lambda: f64, gamma: f64) -> Result<f64> {
        self.require_mean_zero(f, "the preconditioner norm")?;
        let s = self.forward(f)?;
        let k2 = k_squared(&s);
        let w = |p, q| {
            if p == 0 && q == 0 {
                0.0
            } else {
                let k = k2(p, q);
                lambda / k + gamma + k
            }
        };
        Ok(s.weighted_inner(&s, w).max(0.0).sqrt())
    }

    /// `‖f‖_{𝓛⁻¹}`
    pub fn preconditioner_dual_norm(
        &self,
        f: &SpectralField,
        lambda: f64,
        gamma: f64,
    ) -> Result<f64> {
        self.require_mean_zero(f, "the dual preconditioner norm")?;
        let s = self.forward(f)?;
        let k2 = k_squared(&s);
        let w = |p, q| {
            if p == 0 && q == 0 {
                0.0
            } else {
                let k = k2(p, q);
                1.0 / (lambda / k + gamma + k)
            }
        };
        Ok(s.weighted_inner(&s, w).max(0.0).sqrt())
    }

    /// `(∇u, ∇v)` in coefficient space.
    pub fn h1_inner(&self, u: &SpectralField, v: &SpectralField) -> Result<f64> {
        let (a, b) = (self.forward(u)?, self.forward(v)?);
        Ok(a.weighted_inner(&b, k_squared(&a)))
    }
}

/// `h² Σ f⁴`, i.e. `‖f‖⁴_{L⁴}`.
pub fn l4_norm_pow4(f: &SpectralField) -> f64 {
    let h = f.grid().spacing();
    h * h * f.values().iter().map(|v| v * v * v * v).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descent::HilbertElement;
    use crate::spectral::{Axis, Dealias, FourierSymbol, Grid, ZeroModePolicy};
    use std::f64::consts::PI;

    fn cos_x(g: Grid) -> SpectralField {
        SpectralField::from_fn(g, |x, _| (2.0 * PI * x / g.length()).cos())
    }

    #[test]
    fn hand_values_on_the_first_mode() {
        let g = Grid::new(16, 1.0).unwrap();
        let ctx = SpectralContext::new(g);
        let f = cos_x(g);
        assert!((ctx.l2_norm(&f).unwrap().powi(2) - 0.5).abs() < 1e-14);
        assert!((ctx.h1_seminorm(&f).unwrap().powi(2) - 2.0 * PI * PI).abs() < 1e-11);
        assert!((ctx.hm1_norm(&f).unwrap().powi(2) - 1.0 / (8.0 * PI * PI)).abs() < 1e-15);
        // ∫cos⁴ = 3/8
        assert!((ctx.l4_norm(&f).unwrap().powi(4) - 3.0 / 8.0).abs() < 1e-14);
    }

    #[test]
    fn projection_examples() {
        let g = Grid::new(8, 1.0).unwrap();
        assert_eq!(
            mean_zero_project(&SpectralField::constant(g, 5.0)).sup_norm(),
            0.0
        );
        let f = cos_x(g);
        assert!(mean_zero_project(&f).max_abs_diff(&f) < 1e-15);
        let shifted = f.map(|v| v + 3.25);
        assert!(mean_zero_project(&shifted).max_abs_diff(&f) < 1e-14);
    }

    #[test]
    fn laplacian_eigenfunction() {
        let g = Grid::new(16, 1.0).unwrap();
        let ctx = SpectralContext::new(g);
        let f = cos_x(g);
        let out = FourierSymbol::neg_laplacian(g).apply(&ctx, &f).unwrap();
        let expected = f.map(|v| 4.0 * PI * PI * v);
        assert!(out.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn inverse_preconditioner_on_first_mode() {
        let g = Grid::new(16, 1.0).unwrap();
        let ctx = SpectralContext::new(g);
        let f = cos_x(g);
        let out = FourierSymbol::inverse_preconditioner(g, 1.0, 0.0)
            .apply(&ctx, &f)
            .unwrap();
        let k2 = 4.0 * PI * PI;
        let expected = f.map(|v| v / (1.0 / k2 + k2));
        assert!(out.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn inverse_laplacian_of_zero_is_zero() {
        let g = Grid::new(8, 1.0).unwrap();
        let ctx = SpectralContext::new(g);
        let out = FourierSymbol::inverse_neg_laplacian(g)
            .apply(&ctx, &SpectralField::zeros(g))
            .unwrap();
        assert_eq!(out.sup_norm(), 0.0);
    }

    #[test]
    fn strict_mode_rejects_mean() {
        let g = Grid::new(8, 1.0).unwrap();
        let ctx = SpectralContext::with_options(g, Dealias::None, ZeroModePolicy::Strict);
        let f = cos_x(g).map(|v| v + 1.0);
        assert!(matches!(
            FourierSymbol::inverse_neg_laplacian(g).apply(&ctx, &f),
            Err(crate::Error::Precondition(_))
        ));
        assert!(ctx.hm1_norm(&f).is_err());
        // Forward symbols accept any data.
        assert!(FourierSymbol::laplacian(g).apply(&ctx, &f).is_ok());
        // The default context projects instead.
        let lax = SpectralContext::new(g);
        let out = FourierSymbol::inverse_neg_laplacian(g)
            .apply(&lax, &f)
            .unwrap();
        assert!(out.mean().abs() < 1e-15);
    }

    #[test]
    fn derivative_of_sine() {
        let g = Grid::new(16, 2.0).unwrap();
        let ctx = SpectralContext::new(g);
        let f = SpectralField::from_fn(g, |_, y| (2.0 * PI * y / 2.0).sin());
        let out = FourierSymbol::derivative(g, Axis::Y)
            .apply(&ctx, &f)
            .unwrap();
        let expected = SpectralField::from_fn(g, |_, y| PI * (PI * y).cos());
        assert!(out.max_abs_diff(&expected) < 1e-13);
        let dx = FourierSymbol::derivative(g, Axis::X)
            .apply(&ctx, &f)
            .unwrap();
        assert!(dx.sup_norm() < 1e-14);
    }
}

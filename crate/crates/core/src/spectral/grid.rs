use crate::{Error, Result};

/// Uniform `n × n` collocation grid on the periodic square `(0, ℓ)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid size must be a power of two no smaller than 4, got {n}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Config(format!(
                "domain length must be positive, got {length}"
            )));
        }
        Ok(Self { n, length })
    }

    /// Internal padded grids (e.g. `3n/2` for dealiasing) skip validation.
    pub(crate) fn unchecked(n: usize, length: f64) -> Self {
        Self { n, length }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Number of stored samples, `n²`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Columns kept by the real-to-complex transform, `n/2 + 1`.
    pub fn half(&self) -> usize {
        self.n / 2 + 1
    }

    /// Collocation point `(i h, j h)`.
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.spacing();
        (i as f64 * h, j as f64 * h)
    }

    /// Integer wavenumber of spectral row `p` along the first axis, in
    /// `(-n/2, n/2]` with the Nyquist row mapped to `-n/2`.
    pub fn wavenumber(&self, p: usize) -> i64 {
        let n = self.n as i64;
        let p = p as i64;
        if p < n / 2 {
            p
        } else {
            p - n
        }
    }

    /// Angular frequency unit `2π/ℓ`.
    pub fn frequency_unit(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    /// Sharp Poincaré constant `ℓ/(2π)` for mean-zero periodic functions.
    pub fn poincare_constant(&self) -> f64 {
        self.length / (2.0 * std::f64::consts::PI)
    }
}

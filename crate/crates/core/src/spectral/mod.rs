//! Fourier collocation on the periodic square `(0, ℓ)²`.

mod field;
mod grid;
mod mobility;
mod norms;
mod symbol;
mod transform;

pub use field::SpectralField;
pub use grid::Grid;
pub use mobility::{variable_laplacian, MobilityField, VariableLaplacian};
pub use norms::{l4_norm_pow4, mean_zero_project};
pub use symbol::{Axis, FourierSymbol, SpectralPreconditioner};
pub use transform::{
    Dealias, FftCounter, SpectralContext, Spectrum, ZeroModePolicy, MEAN_ZERO_TOLERANCE,
};

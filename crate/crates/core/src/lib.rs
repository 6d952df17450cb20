//! Perturbed preconditioned gradient descent (PPGD) for composite strongly
//! convex objectives, with an FFT-based solver for the stationary
//! Cahn-Hilliard equation with variable mobility.
//!
//! Layout:
//!
//! * [`descent`]: abstract Hilbert-space contracts and the PGD / PPGD loops.
//! * [`spectral`]: periodic Fourier collocation (transforms, symbols, norms,
//!   the variable-mobility operator `∇·(M∇·)`).
//! * [`elliptic`]: inner PGD solver for `−∇·(M∇u) = φ` with exact line search.
//! * [`ch`]: the Cahn-Hilliard problem data, energy, gradients and the
//!   double-loop solver.
//! * [`theory`]: dense finite-dimensional instances and sampling checks of
//!   the convergence estimates.
//! * [`cli`]: configuration, run/sweep orchestration, trace CSVs and plots.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ch;
pub mod cli;
pub mod descent;
pub mod elliptic;
mod error;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};

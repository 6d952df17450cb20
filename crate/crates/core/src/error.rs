use thiserror::Error;

/// Errors raised by the spectral, elliptic and Cahn-Hilliard layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected} samples, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("iteration diverged at step {iteration} ({stage})")]
    Diverged {
        iteration: usize,
        stage: &'static str,
    },

    #[error("inner solve hit its iteration cap ({iterations}) without meeting tolerance")]
    InnerCapped { iterations: usize },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid band layout: {0}")]
    InvalidLayout(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature failed at z1={z1}, gamma1={gamma1}, y={y}: {reason}")]
    Quadrature { z1: num_complex::Complex64, gamma1: f64, y: num_complex::Complex64, reason: String },

    #[error("non-finite value at iteration {iteration}, line {line}: {what}")]
    NonFiniteState { iteration: usize, line: u32, what: &'static str },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("autodiff: {0}")]
    Tape(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("config: {0}")]
    Config(String),

    #[error("results: {0}")]
    Results(String),

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

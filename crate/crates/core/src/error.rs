use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    /// The ascent direction is undefined because the gradient vanished.
    #[error("gradient norm {norm:e} is too small to define a perturbation direction")]
    ZeroGradient { norm: f64 },

    #[error("previous gradient norm {prev:e} is too small to form a sharpness ratio")]
    DegenerateRatio { prev: f64 },

    #[error("divergence detected at step {step}: loss = {loss}")]
    DivergenceDetected { step: usize, loss: f64 },

    /// `nu = 1 - 5 L eta0 / (2 sqrt K)` must be positive for the bound to mean anything.
    #[error("convergence bound is vacuous (nu = {nu})")]
    VacuousBound { nu: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv { path: path.into(), source }
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solver, the model layer and the study harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: node count {n} must be even and at least 4")]
    InvalidGrid { n: usize },

    #[error("invalid domain: right endpoint {b} must exceed left endpoint {a}")]
    InvalidDomain { a: f64, b: f64 },

    #[error("domain mismatch: ({a0}, {b0}) vs ({a1}, {b1})")]
    DomainMismatch { a0: f64, b0: f64, a1: f64, b1: f64 },

    #[error("cannot resample from {from} to {to} nodes: truncation is not supported")]
    UnsupportedResample { from: usize, to: usize },

    #[error("invalid problem parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid initial preset: {0}")]
    InvalidPreset(String),

    #[error("unsupported formulation: {0}")]
    UnsupportedFormulation(String),

    #[error("solution blew up at step {step} (t = {time}): {reason}")]
    BlowUp {
        step: usize,
        time: f64,
        reason: String,
    },

    #[error("not enough usable cells: need {needed}, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("malformed spectrum file {path}: {reason}")]
    MalformedSpectrum { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum SimError {
    /// An argument fell outside the documented domain of an operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// A simulated path left the representable range (overflow to inf/NaN).
    #[error("path diverged at step {step}")]
    DivergedPath { step: usize },

    /// A lattice field produced a non-finite value.
    #[error("field diverged at (i={i}, j={j})")]
    DivergedField { i: usize, j: usize },

    /// Covariance factorization failed even after reconditioning.
    #[error("factorization failed (last jitter tried: {jitter:e})")]
    Factorization { jitter: f64 },

    /// A configuration was rejected before any simulation started.
    #[error("validation error: {0}")]
    Validation(String),

    /// Too many paths diverged for the estimate to be trusted.
    #[error("run failed: {diverged} of {total} paths diverged (threshold {threshold})")]
    DivergenceThreshold {
        diverged: usize,
        total: usize,
        threshold: f64,
    },
}

impl SimError {
    pub fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        SimError::Domain { op, msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;

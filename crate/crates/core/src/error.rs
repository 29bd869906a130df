use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The logarithm chart of SE(2) is undefined at θ = ±π.
    #[error("rotation angle {theta} lies on the logarithm chart boundary")]
    Domain { theta: f64 },

    #[error("point ({x}, {y}) lies outside the spatial window")]
    OutOfDomain { x: f64, y: f64 },

    #[error("group element does not permute the lattice: {reason}")]
    IncompatibleAction { reason: String },

    #[error("non-finite iterate at iteration {iter}")]
    NonFiniteIterate { iter: usize },

    #[error("score component has zero mass")]
    EmptyScore,

    #[error("measure has zero total mass")]
    ZeroMass,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("invalid configuration: {0}")]
    BadConfig(String),

    #[error("no path between lattice sites {source_site} and {target}")]
    Unreachable { source_site: usize, target: usize },

    #[error("dense solver did not reach tolerance after {iters} iterations (error {err:e})")]
    NotConverged { iters: usize, err: f64 },

    #[error("malformed {format} data: {reason}")]
    Format { format: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn bad_config(msg: impl Into<String>) -> Self {
        Error::BadConfig(msg.into())
    }

    pub(crate) fn format(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            format,
            reason: reason.into(),
        }
    }
}

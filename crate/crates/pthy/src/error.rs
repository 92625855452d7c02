//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by estimation, simulation and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A tick series violated a structural invariant.
    #[error("invalid tick series: {0}")]
    InvalidTickSeries(String),

    /// Not enough observations to run an estimator.
    #[error("insufficient data: need at least {required} {what}, got {actual}")]
    InsufficientData {
        what: &'static str,
        required: usize,
        actual: usize,
    },

    /// Two arrays that must be aligned have different lengths.
    #[error("length mismatch for {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// The two refresh-time grids never overlap.
    #[error("empty overlap: the two series share no refresh interval")]
    EmptyOverlap,

    /// The paired series are not observed on identical times.
    #[error("series are not synchronous at index {index}")]
    NotSynchronous { index: usize },

    /// Quadrature failed its internal resolution-doubling check.
    #[error("quadrature did not converge: resolutions differ by {delta:e} (tolerance {tol:e})")]
    QuadratureNonConvergence { delta: f64, tol: f64 },

    /// A parameter was outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A Monte Carlo replication failed; the stream seed identifies it.
    #[error("replication {rep} (stream seed {seed:#018x}) failed: {source}")]
    Replication {
        rep: u64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

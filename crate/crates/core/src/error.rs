//! Crate-wide error type.

use crate::lp_space::SparsePoint;

/// Errors raised by the library operations.
///
/// The CLI maps these onto process exit codes: verification failures
/// (dispersion violations, broken invariants, undefined dispersion) exit 1,
/// sampling that cannot produce a single survivor exits 2, and bad
/// configuration or I/O exits 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("undefined dispersion: fewer than two points")]
    UndefinedDispersion,

    #[error("empty point set: {0}")]
    EmptyPointSet(&'static str),

    #[error("insufficient density: {0}")]
    InsufficientDensity(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("dispersion violation: points {a} and {b} have distance^p = {dist_pow} <= 2")]
    DispersionViolation {
        a: Box<SparsePoint>,
        b: Box<SparsePoint>,
        dist_pow: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("witness verification failed: {0}")]
    WitnessVerification(String),

    #[error("unparseable coordinate label {0:?}")]
    ParseLabel(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square: row {row} has {len} entries, expected {dim}")]
    NotSquare { row: usize, len: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is not expanding: smallest eigenvalue modulus is {min_modulus:.9}")]
    NotExpanding { min_modulus: f64 },

    #[error("|det M| = {0}, but a dilation matrix needs |det M| >= 2")]
    SmallDeterminant(i64),

    #[error("invalid digit set: {0}")]
    InvalidDigits(String),

    #[error("budget exceeded: {what} needs {needed}, limit is {limit}")]
    Budget {
        what: &'static str,
        needed: f64,
        limit: f64,
    },

    #[error("T_0 has no eigenvalue 1 (closest eigenvalue is at distance {distance:.3e})")]
    MissingUnitEigenvalue { distance: f64 },

    #[error("eigenvalue 1 of T_0 has a {dim}-dimensional eigenspace; the refinable function is not determined")]
    AmbiguousEigenspace { dim: usize },

    #[error("mask violates the sum rule of order 0: {0}")]
    SumRuleViolation(String),

    #[error("regularity is not computable on this index set: {0}")]
    Degenerate(String),

    #[error("{what} did not converge (residual {residual:.3e})")]
    NoConvergence { what: &'static str, residual: f64 },

    #[error("Φ is not strictly positive on the torus (minimum {0:.3e}); the shifts do not form a Riesz basis")]
    NotRiesz(f64),

    #[error("zero-free annulus search collapsed to q = {0}; the orthogonalization is near-singular")]
    NearSingular(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown preset `{0}` (expected square, dragon, bear, example2 or unit1d)")]
    UnknownPreset(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to invalid input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::MissingUnitEigenvalue { .. }
                | Error::AmbiguousEigenspace { .. }
                | Error::SumRuleViolation(_)
                | Error::Degenerate(_)
                | Error::NoConvergence { .. }
                | Error::NotRiesz(_)
                | Error::NearSingular(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Numerical laboratory for Wilson loops under a Gaussian two-form field.
//!
//! The pipeline: build an orthonormal basis of a compact semi-simple Lie
//! algebra ([`lie`]), set up a truncated Bargmann–Fock workspace over C^4
//! ([`bargmann`]), attach a rectangular surface and its loop functional nu
//! ([`surface`]), draw Gaussian field samples ([`field`]), weight them by the
//! quartic/cubic interaction density ([`ym`]), and estimate the Wilson loop
//! expectation with a self-normalized ratio estimator ([`estimator`]).

pub mod bargmann;
pub mod estimator;
pub mod field;
pub mod lie;
pub mod quad;
pub mod record;
pub mod rng;
pub mod surface;
pub mod ym;

/// Library-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("truncation tail bound violated: {0}")]
    TailBound(String),
    #[error("ill-conditioned solve: {0}")]
    IllConditioned(String),
    #[error("tolerance check failed: {0}")]
    Tolerance(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for configuration errors, 3 for
    /// tolerance or tail-bound failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::DimensionMismatch(_) => 2,
            Error::TailBound(_) | Error::Tolerance(_) | Error::IllConditioned(_) => 3,
            _ => 1,
        }
    }
}

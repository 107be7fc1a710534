//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A pivot collapsed during Gram-Schmidt deflation; the input columns are
    /// (numerically) linearly dependent. Callers drawing random matrices
    /// should resample.
    #[error("near-singular matrix: pivot {pivot} has norm {norm:.3e} after deflation (threshold {threshold:.0e})")]
    NearSingular {
        pivot: usize,
        norm: f64,
        threshold: f64,
    },

    /// Repeated random draws all came out near-singular. With a working RNG
    /// this has effectively zero probability.
    #[error("orthogonal matrix sampling failed after {attempts} attempts")]
    SamplingFailed { attempts: u32 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    /// Two charge-model points stayed coincident even after jitter.
    #[error("degenerate state: points {i} and {j} coincide after {attempts} jitter attempts")]
    DegenerateState { i: usize, j: usize, attempts: u32 },

    /// The normal-equations matrix of the centroid basis is numerically
    /// singular; the input is not a usable centroid system.
    #[error(
        "ill-conditioned centroid basis: condition estimate {estimate:.3e} exceeds {limit:.0e}"
    )]
    IllConditioned { estimate: f64, limit: f64 },

    #[error("zero vector: norm {norm:.3e} is below {min:.0e}")]
    ZeroVector { norm: f64, min: f64 },

    #[error("feature row {row} has near-zero norm {norm:.3e}")]
    ZeroFeature { row: usize, norm: f64 },

    #[error("non-finite value in {context} at step {step}")]
    NonFinite { context: &'static str, step: usize },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("matrix is not orthogonal: max |M^T M - I| = {residual:.3e}")]
    NotOrthogonal { residual: f64 },
}

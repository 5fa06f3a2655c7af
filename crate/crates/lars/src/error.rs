//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by design construction, path solvers and the
/// selection/resampling machinery.
#[derive(Debug, Clone, Error)]
pub enum LarsError {
    /// A predictor column has zero variance and cannot be scaled.
    #[error("column {0} is constant (zero variance)")]
    ConstantColumn(usize),

    /// Input shapes do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The Gram matrix of the (signed) active columns is numerically
    /// singular; the offending column set is reported.
    #[error("singular active set: columns {0:?}")]
    SingularActiveSet(Vec<usize>),

    /// A de-standardizing operation was requested on a raw-mode design.
    #[error("design was built in raw mode; no standardization metadata")]
    NotStandardized,

    /// The residual variance cannot be estimated from the design.
    #[error("residual variance not estimable: {0}")]
    SigmaUnestimable(String),

    /// A parameter violates its documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// More than 20% of bootstrap replicates failed.
    #[error("too many failed replicates: {failed} of {total}")]
    TooManyFailures { failed: usize, total: usize },

    /// A cross-validation fold could not be prepared even after the
    /// one permitted re-draw.
    #[error("cross-validation fold degenerate after re-draw: {0}")]
    DegenerateFold(String),

    /// Internal safety cap on path iterations was exceeded.
    #[error("path did not converge within {0} knots")]
    PathDidNotConverge(usize),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, LarsError>;

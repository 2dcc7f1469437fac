//! Error type shared by every module of the crate.

use thiserror::Error;

/// Unified error type for layout, linear-algebra, state, channel, and solver failures.
#[derive(Debug, Error)]
pub enum Error {
    /// A system label was not found in the layout it was used with.
    #[error("unknown system label `{0}`")]
    UnknownLabel(String),

    /// Two subsystems of one layout carry the same label.
    #[error("duplicate system label `{0}`")]
    DuplicateLabel(String),

    /// Dimension bookkeeping between layouts and matrices failed.
    #[error("layout error: {0}")]
    Layout(String),

    /// A requested object would exceed the configured dimension cap.
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    /// A matrix has the wrong shape for the requested operation.
    #[error("shape error: {0}")]
    Shape(String),

    /// A matrix required to be Hermitian is not.
    #[error("matrix is not Hermitian (max |M - M^†| entry = {0:.3e})")]
    NotHermitian(f64),

    /// A matrix required to be positive semidefinite has a negative eigenvalue
    /// below tolerance.
    #[error("matrix is not positive semidefinite (min eigenvalue = {0:.3e})")]
    NotPositive(f64),

    /// A density matrix or pure state failed validation.
    #[error("invalid state: {0}")]
    State(String),

    /// A Choi matrix failed CPTP validation.
    #[error("invalid channel: {0}")]
    Channel(String),

    /// An eigendecomposition or singular-value decomposition did not converge.
    #[error("decomposition failed: {0}")]
    Decomposition(String),

    /// An iterative solver hit its cap before reaching the requested residual.
    #[error("solver did not converge: {0}")]
    Convergence(String),

    /// An objective left its domain (e.g. every restart of a relative-entropy
    /// minimization started outside the support condition).
    #[error("objective domain error: {0}")]
    Domain(String),

    /// A scalar argument was outside its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Unified error type for the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A context parameter was rejected (p not prime, m = 0, ...).
    #[error("invalid context: {0}")]
    InvalidContext(String),

    /// Two values from incompatible contexts were combined.
    #[error("context mismatch: {0}")]
    ContextMismatch(String),

    /// A rational whose denominator is divisible by p was used where a
    /// p-integral value is required.
    #[error("denominator is not a unit: {0}")]
    NonUnitDenominator(String),

    /// An argument was structurally invalid (dimension mismatch, empty
    /// degree list, d = 0, non-canonical tuple, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A division or inversion hit a non-unit.
    #[error("not invertible: {0}")]
    NotInvertible(String),

    /// An exhaustive enumeration would exceed the configured guard.
    #[error("enumeration too large: {0}")]
    TooLarge(String),

    /// The requested combination (k, n, degrees) is outside the supported
    /// positive-codimension regime.
    #[error("unsupported regime: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

use crate::convex::Status;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Array dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A starting point or schedule violates a constraint that the caller must repair.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The convex solver terminated without an acceptable point.
    #[error("solver returned {status:?} during {context}")]
    Solver { status: Status, context: String },

    /// Exhaustive enumeration would exceed the configured bound.
    #[error("enumeration of {count} schedules exceeds the limit of {limit}")]
    EnumerationTooLarge { count: f64, limit: usize },

    /// A numerical check produced a non-finite value.
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;

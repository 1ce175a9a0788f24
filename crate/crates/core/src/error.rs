use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate source: {0}")]
    DegenerateSource(String),

    #[error("probability table has no entry for angle difference {0}°")]
    MissingTableEntry(f64),

    #[error("no counts recorded for orientation pair ({first}°, {second}°)")]
    MissingCounts { first: f64, second: f64 },

    #[error("source is not rotationally symmetric: max deviation {deviation:.3e} exceeds {tolerance:.3e}")]
    SymmetryViolated { deviation: f64, tolerance: f64 },

    #[error("auxiliary assumption failed: {0}")]
    AssumptionFailed(String),

    #[error("comparison undefined: {0}")]
    UndefinedComparison(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

use thiserror::Error;

/// Errors raised by the bound, inversion and oracle routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid experiment shape (k = {k}, n = {n}): {reason}")]
    InvalidShape {
        k: usize,
        n: usize,
        reason: &'static str,
    },

    #[error("lambda = {0} is outside the domain {1}")]
    LambdaOutOfRange(f64, &'static str),

    #[error("deviation threshold t = {0} must be positive and finite")]
    InvalidThreshold(f64),

    #[error(
        "t = {t} must exceed k - 1 = {k_minus_one} for the closed-form plug-in bounds; \
         use the exact Chernoff bound instead"
    )]
    BelowCorrectionDomain { t: f64, k_minus_one: f64 },

    #[error("alpha = {0} must lie strictly between 0 and 1")]
    InvalidAlpha(f64),

    #[error("critical value search failed: {0}")]
    SearchFailed(&'static str),

    #[error("{0} is a reference curve, not a bound")]
    NotABound(&'static str),

    #[error("invalid probability vector: {0}")]
    InvalidProbVector(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("enumeration of {count} outcomes exceeds the limit of {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error("sample count must be at least 1")]
    NoSamples,

    #[error("coordinate {coord} is outside 1..={k}")]
    CoordOutOfRange { coord: usize, k: usize },

    #[error("invalid count data: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

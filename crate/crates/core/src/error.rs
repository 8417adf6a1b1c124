//! Error type shared by every module.

use thiserror::Error;

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by library operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A transform or grid length is not supported.
    #[error("sizing error: {0}")]
    Sizing(String),
    /// Every polynomial coefficient is zero.
    #[error("degenerate polynomial")]
    DegeneratePolynomial,
    /// A magnitude spectrum has a zero, negative or non-finite sample.
    #[error("magnitude spectrum must be strictly positive and finite (bin {0})")]
    NonPositiveMagnitude(usize),
    /// A scalar parameter is outside its valid range.
    #[error("{name} = {value} is out of range ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    /// Input to the all-pass square root is not unit modulus.
    #[error("not an all-pass spectrum (max modulus deviation {0:.3e})")]
    NotAllPass(f64),
    /// Two inputs disagree in length.
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    /// A linear system could not be solved.
    #[error("singular system: {0}")]
    Singular(String),
    /// A precoding mode needs a channel decomposition that was not supplied.
    #[error("scheme {0} requires the Alice-Bob channel decomposition")]
    MissingDecomposition(&'static str),
    /// A statistic was requested from too few samples.
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    /// A signal or reference has zero power.
    #[error("zero-power {0}")]
    ZeroPower(&'static str),
    /// An experiment configuration violates its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Malformed CSV or config input.
    #[error("parse error: {0}")]
    Parse(String),
    /// Filesystem failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    expected: &'static str,
) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected,
        })
    }
}

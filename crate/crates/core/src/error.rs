use alloc::string::String;
use core::fmt;

use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The system definition violates one of its invariants.
    InvalidSystem(String),
    /// An argument is outside the documented domain of an operation.
    InvalidArgument(String),
    /// A non-finite value appeared while integrating; `time` is the first bad grid time.
    IntegrationFailure { time: f64 },
    /// A matrix that must be inverted is numerically singular.
    Conditioning { condition: f64 },
    /// The eigenvalue solver failed.
    Diagnostics(String),
    /// An orbit left a bounded fiber.
    Escaped { step: usize },
    /// A box cover would exceed the size guard.
    ResolutionOverflow { boxes: u128 },
    /// A supplied chain does not satisfy the residual bound that the construction requires.
    Precondition { step: usize, residual: f64, bound: f64 },
    /// A constructed chain failed exact re-verification.
    Construction { step: usize, residual: f64, bound: f64 },
    /// None of the three wrap cases applies to a projected step.
    CaseSelection { step: usize },
    /// A function sampled on a grid returned a non-finite value.
    Evaluation { at: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSystem(msg) => write!(f, "invalid system: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::IntegrationFailure { time } => {
                write!(f, "integration produced non-finite values at grid time {time}")
            }
            Error::Conditioning { condition } => {
                write!(f, "numerically singular operator (condition estimate {condition:e})")
            }
            Error::Diagnostics(msg) => write!(f, "diagnostics failed: {msg}"),
            Error::Escaped { step } => write!(f, "orbit escaped the fiber region at step {step}"),
            Error::ResolutionOverflow { boxes } => {
                write!(f, "box cover with {boxes} boxes exceeds the 10^7 limit")
            }
            Error::Precondition { step, residual, bound } => {
                write!(f, "input chain step {step} has residual {residual:e} not below required bound {bound:e}")
            }
            Error::Construction { step, residual, bound } => {
                write!(f, "constructed chain step {step} has residual {residual:e} not below bound {bound:e}")
            }
            Error::CaseSelection { step } => {
                write!(f, "no base-coordinate case applies at chain step {step}")
            }
            Error::Evaluation { at } => write!(f, "non-finite function value at {at}"),
        }
    }
}

impl core::error::Error for Error {}

impl From<LinalgError> for Error {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular { condition } => Error::Conditioning { condition },
            LinalgError::EigenNoConvergence => Error::Diagnostics(alloc::format!("{e}")),
            LinalgError::DimensionMismatch { .. } => Error::InvalidArgument(alloc::format!("{e}")),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

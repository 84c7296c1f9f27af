//! Crate-wide error type.
//!
//! Every fallible operation in the crate returns [`Error`]. Parse errors carry
//! a 1-based line and column into the model file; numeric errors carry the
//! offending values so messages are actionable without a debugger.

use std::fmt;
use std::io;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// Series construction with an empty coefficient list or non-finite data.
    InvalidSeries(String),
    /// Binary series operation on operands with different expansion centers.
    CenterMismatch { left: f64, right: f64 },
    /// Derivative order exceeds the polynomial order of the series.
    OrderTooLow { requested: usize, order: usize },
    /// Leading denominator coefficient below the division floor.
    DivisionBySmallLeadingCoefficient { leading: f64, floor: f64 },

    /// Malformed model text. Line and column are 1-based.
    Syntax { line: usize, col: usize, msg: String },
    /// Bracketed state index outside 1..=r.
    UnknownDelayIndex { line: usize, col: usize, index: usize, delays: usize },
    /// More primes than the model order allows at that position.
    DerivativeOrderTooHigh { line: usize, col: usize, deriv: u32, max: u32 },
    /// The history expression refers to the unknown.
    HistoryContainsState { line: usize, col: usize },
    /// Exponent after '^' is not a non-negative integer literal.
    NonIntegerExponent { line: usize, col: usize },
    /// A structural model invariant does not hold (domain, delays, orders, ic).
    ModelInvariant(String),

    /// The right-hand side is not solvable for the highest derivative.
    ImplicitRecurrence,
    /// A denominator depends on the current-time unknown.
    UnsupportedCurrentStateDenominator,
    /// An exp argument depends on the current-time unknown.
    UnsupportedCurrentStateInExp,

    /// The schedule would exceed the configured segment cap.
    TooManySegments { needed: usize, cap: usize },
    /// Evaluation point outside [t0 - max delay, T].
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    /// A recurrence coefficient became NaN, infinite, or larger than 1e100.
    NonFiniteCoefficient { segment: usize, index: usize },

    /// The integrator state became non-finite.
    NonFiniteState { t: f64 },
    /// Step size exceeds the smallest delay, so lookups would read ahead.
    StepTooLarge { h: f64, min_delay: f64 },

    Io(io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSeries(msg) => write!(f, "invalid series: {msg}"),
            Error::CenterMismatch { left, right } => {
                write!(f, "series centers differ: {left} vs {right}")
            }
            Error::OrderTooLow { requested, order } => {
                write!(f, "derivative order {requested} exceeds series order {order}")
            }
            Error::DivisionBySmallLeadingCoefficient { leading, floor } => write!(
                f,
                "series division: leading denominator coefficient {leading:e} is below the floor {floor:e}"
            ),
            Error::Syntax { line, col, msg } => write!(f, "{line}:{col}: {msg}"),
            Error::UnknownDelayIndex { line, col, index, delays } => write!(
                f,
                "{line}:{col}: delay index {index} out of range (model has {delays} delay(s))"
            ),
            Error::DerivativeOrderTooHigh { line, col, deriv, max } => write!(
                f,
                "{line}:{col}: derivative order {deriv} too high here (at most {max})"
            ),
            Error::HistoryContainsState { line, col } => {
                write!(f, "{line}:{col}: history must be a function of t only")
            }
            Error::NonIntegerExponent { line, col } => {
                write!(f, "{line}:{col}: exponent must be a non-negative integer")
            }
            Error::ModelInvariant(msg) => write!(f, "invalid model: {msg}"),
            Error::ImplicitRecurrence => write!(
                f,
                "right-hand side contains the unknown's highest derivative at the current time"
            ),
            Error::UnsupportedCurrentStateDenominator => write!(
                f,
                "denominators may not depend on the unknown at the current time"
            ),
            Error::UnsupportedCurrentStateInExp => write!(
                f,
                "exp arguments may not depend on the unknown at the current time"
            ),
            Error::TooManySegments { needed, cap } => {
                write!(f, "schedule needs {needed} segments, cap is {cap}")
            }
            Error::OutOfDomain { t, lo, hi } => {
                write!(f, "t = {t} outside the solution domain [{lo}, {hi}]")
            }
            Error::NonFiniteCoefficient { segment, index } => write!(
                f,
                "coefficient {index} of segment {segment} blew up (non-finite or above 1e100)"
            ),
            Error::NonFiniteState { t } => {
                write!(f, "integrator state became non-finite near t = {t}")
            }
            Error::StepTooLarge { h, min_delay } => write!(
                f,
                "step size {h} exceeds the smallest delay {min_delay}; lookups would read ahead"
            ),
            Error::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Io(e)
    }
}

//! Directed-rounding arithmetic: bounds and the closed intervals built on them.

mod bound;
mod interval;

pub use bound::{MPBound, Precision, Rounding};
pub use interval::{sum_measure, MPInterval, WidthBounds};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrecisionError {
    #[error("precision of {0} bits is out of range")]
    InvalidPrecision(u32),
    #[error("interval lower end exceeds upper end")]
    InvalidInterval,
    #[error("square root of a negative number")]
    NegativeSqrt,
    #[error("division by zero")]
    DivisionByZero,
    #[error("value is not a number")]
    NotANumber,
    #[error("interval has an infinite endpoint")]
    NonFinite,
    #[error("{0}")]
    Parse(String),
    #[error("{text} is not representable with {prec} bits")]
    Inexact { text: String, prec: u32 },
}

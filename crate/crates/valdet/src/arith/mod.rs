//! Directed-rounding interval arithmetic over MPFR floats.

mod complex;
mod real;

pub use complex::ValidatedComplex;
pub use real::{
    float_to_decimal, iv_log, iv_mul, iv_pow_real, parse_decimal_rational, ValidatedReal,
    MIN_PRECISION,
};
#[allow(unused_imports)]
pub(crate) use real::{down, up};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("argument is not strictly positive")]
    NonPositiveArgument,
    #[error("division by an interval containing zero")]
    DivisionByZero,
    #[error("complex argument meets the branch cut of the principal logarithm")]
    BranchCut,
    #[error("interval endpoints are out of order or NaN")]
    InvalidInterval,
    #[error("cannot parse number `{0}`")]
    Parse(String),
}

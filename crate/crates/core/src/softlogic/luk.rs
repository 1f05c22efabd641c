//! Łukasiewicz connectives over `[0, 1]`.

use serde::{Deserialize, Serialize};

use super::SoftLogicError;
use crate::scalar::{max, min, Truth};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connective {
    And,
    Or,
    Neg,
}

/// Strong conjunction `max(0, a + b - 1)`.
pub fn and<T: Truth>(a: T, b: T) -> T {
    max(T::zero(), a + b - T::one())
}

/// Strong disjunction `min(a + b, 1)`.
pub fn or<T: Truth>(a: T, b: T) -> T {
    min(a + b, T::one())
}

pub fn neg<T: Truth>(a: T) -> T {
    T::one() - a
}

/// Implication `min(1, 1 - a + b)`.
pub fn implies<T: Truth>(a: T, b: T) -> T {
    min(T::one(), T::one() - a + b)
}

/// n-ary conjunction `max(0, sum - (n - 1))`; the empty conjunction is 1.
pub fn and_all<T: Truth>(values: impl IntoIterator<Item = T>) -> T {
    values.into_iter().fold(T::one(), and)
}

fn check_unit<T: Truth>(v: T) -> Result<T, SoftLogicError> {
    if v >= T::zero() && v <= T::one() {
        Ok(v)
    } else {
        Err(SoftLogicError::OutOfUnitRange(format!("{v:?}")))
    }
}

/// Checked evaluation of a single connective.
///
/// `Neg` ignores `b`; the binary connectives require it.
pub fn eval<T: Truth>(op: Connective, a: T, b: Option<T>) -> Result<T, SoftLogicError> {
    let a = check_unit(a)?;
    let b = b.map(check_unit).transpose()?;
    match (op, b) {
        (Connective::Neg, _) => Ok(neg(a)),
        (Connective::And, Some(b)) => Ok(and(a, b)),
        (Connective::Or, Some(b)) => Ok(or(a, b)),
        (op, None) => Err(SoftLogicError::MissingOperand(op)),
    }
}

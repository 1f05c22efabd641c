//! Scalar abstractions shared by the soft-logic engine and the metrics.
//!
//! Truth values only need ordered ring arithmetic, so the Łukasiewicz
//! connectives work over exact rationals as well as floats. The solvers and
//! metrics need square roots and conversions and therefore require [`Real`].

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Ordered numeric type usable as a fuzzy truth value.
pub trait Truth: Num + PartialOrd + Copy + Debug {}

impl<T> Truth for T where T: Num + PartialOrd + Copy + Debug {}

/// Floating point scalar used by inference and aggregation.
pub trait Real: Truth + Float + FromPrimitive + ToPrimitive + Display + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn clamp_unit<T: Truth>(v: T) -> T {
    if v < T::zero() {
        T::zero()
    } else if v > T::one() {
        T::one()
    } else {
        v
    }
}

pub(crate) fn max<T: PartialOrd>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

pub(crate) fn min<T: PartialOrd>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

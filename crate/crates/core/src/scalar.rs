//! Numeric abstraction shared by every potential operation.
//!
//! Cell values only need a commutative semiring with division, an order to
//! pick maxima, and conversions for cardinalities. `f64` is the working type;
//! `f32` and exact rationals also satisfy the bound, which the tests use to
//! check worked examples without rounding.

use std::fmt::{Debug, Display};

use num_traits::{FromPrimitive, Num, NumAssign, ToPrimitive};

/// Cell value type of a potential.
pub trait Scalar:
    Num + NumAssign + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lift a count (levelset size, row count) into the scalar type.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Num + NumAssign + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

/// Relative comparison `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    let scale = 1f64.max(a.abs()).max(b.abs());
    (a - b).abs() <= tol * scale
}

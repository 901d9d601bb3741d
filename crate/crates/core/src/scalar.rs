use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point type the numerics are generic over. Implemented for `f32` and `f64`.
///
/// Tolerances throughout the crate are calibrated for `f64`; `f32` is supported for the
/// grid, projection and kernel layers but the optimizers will usually not meet the
/// default tolerances in single precision.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only for values not representable at all, which
    /// cannot happen for finite `f64` input.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to every supported scalar")
    }

    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Positive part.
pub fn pos<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

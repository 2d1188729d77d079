//! Floating-point abstraction so the library runs on `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type used for rates, loads and simulated clock times.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Display + Debug + Send + Sync + 'static
{
    /// Converts an `f64` constant, rounding if the target type is narrower.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("float constant converts to scalar type")
    }

    /// Widens to `f64` for reporting; NaN if the value does not convert.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// The constant 2 in the scalar type.
pub(crate) fn two<T: Scalar>() -> T {
    T::one() + T::one()
}

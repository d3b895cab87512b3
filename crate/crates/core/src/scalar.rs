//! Scalar abstraction for the math core.
//!
//! Everything in `model`, `entropy`, `riccati`, `closed_form`, and `game` is
//! generic over [`Scalar`] so the same formulas run in `f32` or `f64`. The
//! simulator and CLI pin `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, for literals in generic code.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Floating-point scalar used throughout the spectral, Picard and solver code.
///
/// Implemented for `f32` and `f64`. Exact arithmetic (rationals) is only
/// needed by the box-convolution evaluator, which has its own looser bound.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Debug
    + Display
    + LowerExp
    + Default
    + 'static
{
    /// Converts an `f64` literal or parameter into this scalar.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts an integer count or index.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    fn of_i64(n: i64) -> Self {
        Self::from_i64(n).expect("i64 representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}

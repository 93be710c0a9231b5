//! Scalar abstraction shared by the model and the estimators.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FftNum
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Infallible for the float types this trait is implemented for.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count or index.
    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Propagation speed of the radio signal, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reduces `x` into `[0, 2π)`.
#[inline]
pub fn wrap_two_pi<T: Real>(x: T) -> T {
    let tau = T::TAU();
    let r = x - tau * (x / tau).floor();
    // rounding can land exactly on 2π for tiny negative inputs
    if r >= tau || r < T::zero() {
        T::zero()
    } else {
        r
    }
}

/// Reduces `x` into `(-π, π]`.
#[inline]
pub fn wrap_pi<T: Real>(x: T) -> T {
    let tau = T::TAU();
    let pi = T::PI();
    x - tau * ((x - pi) / tau).ceil()
}

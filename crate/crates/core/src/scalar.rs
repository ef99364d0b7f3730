//! Floating-point scalar abstraction shared by the statistics code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar type the test statistics are computed in.
///
/// Implemented for `f32` and `f64`. Constants are written as `f64`
/// literals and converted through [`Scalar::lit`].
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    /// Converts a count into `Self`.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Default + Debug + Display + Send + Sync + 'static
{
}

pub(crate) fn mean<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::nan();
    }
    let mut s = T::zero();
    for &x in xs {
        s += x;
    }
    s / T::of_usize(xs.len())
}

/// Variance with divisor `n`, two-pass.
pub(crate) fn pop_variance<T: Scalar>(xs: &[T]) -> T {
    let m = mean(xs);
    let mut s = T::zero();
    for &x in xs {
        let d = x - m;
        s += d * d;
    }
    s / T::of_usize(xs.len())
}

pub(crate) fn max_abs<T: Scalar>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |a, &x| a.max(x.abs()))
}

/// `floor(x)` robust to `x` landing a few ulps below an integer.
pub(crate) fn robust_floor(x: f64) -> f64 {
    (x * (1.0 + 1e-12)).floor()
}

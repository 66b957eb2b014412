//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real field the toolkit computes over.
///
/// Implemented for `f32` and `f64`. All structure constants are complex
/// numbers `Complex<T>` over a `Real` base.
pub trait Real:
    'static
    + Send
    + Sync
    + Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Default
    + Sum
    + Debug
    + Display
    + LowerExp
{
    /// Default comparison tolerance for this precision.
    fn default_tol() -> Self;
}

impl Real for f64 {
    fn default_tol() -> Self {
        1e-9
    }
}

impl Real for f32 {
    fn default_tol() -> Self {
        1e-4
    }
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable")
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable")
}

#[inline]
#[cfg(test)]
pub(crate) fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn one<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

#[inline]
pub(crate) fn zero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// `|a - b| / (1 + max(|a|, |b|))`, the scale-aware discrepancy used by all checks.
#[inline]
pub fn rel_gap<T: Real>(a: Complex<T>, b: Complex<T>) -> T {
    (a - b).norm() / (T::one() + a.norm().max(b.norm()))
}

/// Scale-aware gap between two coordinate vectors (max-norm based).
pub fn rel_gap_vec<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut diff = T::zero();
    let mut scale = T::zero();
    for (x, y) in a.iter().zip(b) {
        diff = diff.max((*x - *y).norm());
        scale = scale.max(x.norm()).max(y.norm());
    }
    diff / (T::one() + scale)
}

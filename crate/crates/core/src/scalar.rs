//! Numeric trait shared by every generic routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Absolute tolerance used by bisection loops.
    ///
    /// `1e-12` for `f64`; a few ulps around 1 for narrower types.
    fn root_tol() -> Self {
        let floor = Self::epsilon() * lit(4.0);
        let wanted = lit::<Self>(1e-12);
        if wanted > floor {
            wanted
        } else {
            floor
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts `T` into `f64`.
#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

pub(crate) fn clamp<T: Scalar>(x: T, lo: T, hi: T) -> T {
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

/// Bisection for the root of a function that is positive at `lo` and
/// negative at `hi` (or the reverse when `increasing` is set).
pub(crate) fn bisect<T: Scalar, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T, increasing: bool, tol: T) -> T {
    let two = lit::<T>(2.0);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) / two;
        let v = f(mid);
        let root_above = if increasing { v < T::zero() } else { v > T::zero() };
        if root_above {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / two
}

/// Golden-section search for the maximizer of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_max<T: Scalar, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T, tol: T) -> T {
    let inv_phi = lit::<T>(0.618_033_988_749_894_8);
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..300 {
        if hi - lo <= tol {
            break;
        }
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        }
    }
    (lo + hi) / lit(2.0)
}

use crate::error::{check_range, Error, Result};
use crate::scalar::{bisect, lit, to_f64, Scalar};

fn disc<T: Scalar>(q: T) -> T {
    (lit::<T>(4.0) * q * q - q + lit(4.0)).sqrt()
}

/// `(-(2 - q) + sqrt(4q^2 - q + 4)) / (3q)` for `q` in `(0, 1]`.
pub fn optimal_r_closed_form<T: Scalar>(q: T) -> Result<T> {
    check_range("q", to_f64(q), f64::MIN_POSITIVE, 1.0, "(0, 1]")?;
    Ok((disc(q) - (lit::<T>(2.0) - q)) / (lit::<T>(3.0) * q))
}

/// `h(q)`: the optimal `r` for the log1p utility, with `h(0) = 1/4`.
///
/// Evaluated as `(1 + q) / (sqrt(4q^2 - q + 4) + 2 - q)`, which equals the
/// closed form for `q > 0` and has no cancellation near zero.
pub fn h_eval<T: Scalar>(q: T) -> Result<T> {
    check_range("q", to_f64(q), 0.0, 1.0, "[0, 1]")?;
    Ok(h_unchecked(q))
}

pub(crate) fn h_unchecked<T: Scalar>(q: T) -> T {
    (T::one() + q) / (disc(q) + lit::<T>(2.0) - q)
}

/// `h'(q) = (q - 8 + 4 s) / (6 q^2 s)` with `s = sqrt(4q^2 - q + 4)`,
/// rationalized to `21 / (2 s (4 s + 8 - q))` so that `h'(0) = 21/64`.
pub fn h_derivative<T: Scalar>(q: T) -> Result<T> {
    check_range("q", to_f64(q), 0.0, 1.0, "[0, 1]")?;
    let s = disc(q);
    Ok(lit::<T>(21.0) / (lit::<T>(2.0) * s * (lit::<T>(4.0) * s + lit(8.0) - q)))
}

/// `[h(0), h(1)] = [1/4, (sqrt 7 - 1)/3]`.
pub fn h_range<T: Scalar>() -> (T, T) {
    (lit(0.25), (lit::<T>(7.0).sqrt() - T::one()) / lit(3.0))
}

/// `h'(1) = 2/3 - sqrt(7)/6`, the minimum slope of `h` on `[0, 1]`.
pub fn beta<T: Scalar>() -> T {
    lit::<T>(2.0) / lit(3.0) - lit::<T>(7.0).sqrt() / lit(6.0)
}

/// Solves `h(q) = y` by bisection. Inputs within `1e-9` outside the range
/// are clamped onto it; anything further is rejected.
pub fn h_inverse<T: Scalar>(y: T) -> Result<T> {
    let (lo, hi) = h_range::<T>();
    let slack = lit::<T>(1e-9);
    if y.is_nan() || y < lo - slack || y > hi + slack {
        return Err(Error::OutOfRange {
            name: "y",
            value: to_f64(y),
            range: "[h(0), h(1)]",
        });
    }
    Ok(h_inverse_clamped(y))
}

/// `h^{-1}` of `y` projected onto `[h(0), h(1)]`.
pub(crate) fn h_inverse_clamped<T: Scalar>(y: T) -> T {
    let (lo, hi) = h_range::<T>();
    if y <= lo {
        return T::zero();
    }
    if y >= hi {
        return T::one();
    }
    bisect(|q| h_unchecked(q) - y, T::zero(), T::one(), true, T::root_tol())
}

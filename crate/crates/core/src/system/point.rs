use std::ops::{Add, Mul, Sub};

use crate::error::{check_range, Result};
use crate::scalar::{lit, to_f64, Scalar};

/// A pair of per-slot or time-averaged transmission rates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RatePoint<T> {
    pub x1: T,
    pub x2: T,
}

impl<T: Scalar> RatePoint<T> {
    /// Builds a point, rejecting coordinates outside `[0, 1]`.
    pub fn new(x1: T, x2: T) -> Result<Self> {
        check_range("x1", to_f64(x1), 0.0, 1.0, "[0, 1]")?;
        check_range("x2", to_f64(x2), 0.0, 1.0, "[0, 1]")?;
        Ok(Self { x1, x2 })
    }

    pub const fn new_unchecked(x1: T, x2: T) -> Self {
        Self { x1, x2 }
    }

    pub fn in_unit_square(&self) -> bool {
        self.x1 >= T::zero() && self.x1 <= T::one() && self.x2 >= T::zero() && self.x2 <= T::one()
    }

    pub fn dot(&self, other: &Self) -> T {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    /// Entrywise `self >= other - tol`.
    pub fn dominates(&self, other: &Self, tol: T) -> bool {
        self.x1 >= other.x1 - tol && self.x2 >= other.x2 - tol
    }

    /// `(1 - w) * self + w * other`.
    pub fn lerp(&self, other: &Self, w: T) -> Self {
        *self * (T::one() - w) + *other * w
    }

    pub fn cast<U: Scalar>(&self) -> RatePoint<U> {
        RatePoint::new_unchecked(lit(to_f64(self.x1)), lit(to_f64(self.x2)))
    }
}

impl<T: Scalar> Add for RatePoint<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new_unchecked(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl<T: Scalar> Sub for RatePoint<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new_unchecked(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl<T: Scalar> Mul<T> for RatePoint<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        Self::new_unchecked(self.x1 * k, self.x2 * k)
    }
}

/// Member of the decision set `D(s)`: `(1, 0)` when `s = 0`, otherwise the
/// curve point `(r, 1 - r^2)`.
pub fn decision_set_point<T: Scalar>(s: u8, r: T) -> Result<RatePoint<T>> {
    check_range("s", s as f64, 0.0, 1.0, "{0, 1}")?;
    check_range("r", to_f64(r), 0.0, 1.0, "[0, 1]")?;
    Ok(if s == 0 {
        super::forced_decision()
    } else {
        RatePoint::new_unchecked(r, T::one() - r * r)
    })
}

/// Rates of two frequency-separated AWGN channels sharing bandwidth `b`,
/// user 1 getting the fraction `theta1` (natural log, so rates are in nats).
///
/// A zero bandwidth share contributes rate 0. Coordinates exceed 1 when
/// `b` is large; the value is not clipped.
pub fn shannon_fdm_point<T: Scalar>(theta1: T, b: T, snr: T) -> Result<RatePoint<T>> {
    check_range("theta1", to_f64(theta1), 0.0, 1.0, "[0, 1]")?;
    check_range("B", to_f64(b), f64::MIN_POSITIVE, f64::INFINITY, "(0, inf)")?;
    check_range("P/N", to_f64(snr), f64::MIN_POSITIVE, f64::INFINITY, "(0, inf)")?;
    let rate = |share: T| {
        if share <= T::zero() {
            T::zero()
        } else {
            share * b * (snr / share).ln_1p()
        }
    };
    Ok(RatePoint::new_unchecked(rate(theta1), rate(T::one() - theta1)))
}

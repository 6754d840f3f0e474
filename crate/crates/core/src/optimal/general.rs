use super::hmap::{h_inverse_clamped, h_unchecked};
use crate::error::{check_range, Error, Result};
use crate::scalar::{bisect, count, lit, to_f64, Scalar};
use crate::system::UtilityFunction;

/// `g(q, r) = phi1'(1 - q + q r) - 2 r phi2'(q (1 - r^2))`, the derivative
/// of the utility along the boundary divided by `q`.
fn g<T: Scalar>(u: &UtilityFunction<T>, q: T, r: T) -> Result<T> {
    let two = lit::<T>(2.0);
    Ok(u.d1(1, T::one() - q + q * r)? - two * r * u.d1(2, q * (T::one() - r * r))?)
}

/// Root of `g(q, .)` on `[0, 1]` for `q` in `[0, 1]`. At `q = 0` the root
/// is the continuous limit `phi1'(1) / (2 phi2'(0))`.
pub(crate) fn bisect_r<T: Scalar>(q: T, u: &UtilityFunction<T>) -> Result<T> {
    let at0 = g(u, q, T::zero())?;
    let at1 = g(u, q, T::one())?;
    if !(at0 > T::zero() && at1 < T::zero()) {
        return Err(Error::Assumption(format!(
            "g(q, 0) = {at0} and g(q, 1) = {at1} do not bracket a root at q = {q}"
        )));
    }
    Ok(bisect(
        |r| g(u, q, r).unwrap_or(T::nan()),
        T::zero(),
        T::one(),
        false,
        T::root_tol(),
    ))
}

/// Unique root in `(0, 1)` of the stationarity equation
/// `phi1'(1 - q + q r) = 2 r phi2'(q (1 - r^2))` for a separable utility.
pub fn solve_general_r<T: Scalar>(q: T, u: &UtilityFunction<T>) -> Result<T> {
    let qf = to_f64(q);
    if !(qf > 0.0 && qf < 1.0) {
        return Err(Error::OutOfRange {
            name: "q",
            value: qf,
            range: "(0, 1)",
        });
    }
    u.check_root_condition()?;
    bisect_r(q, u)
}

/// The increasing map from channel probability to optimal curve parameter.
#[derive(Clone)]
pub enum HMap<T> {
    /// Closed form for the log1p utility, inverted on `[h(0), h(1)]`.
    Log1p,
    /// Solved map for a separable utility, inverted on `[h(1/4), h(3/4)]`.
    General(UtilityFunction<T>),
}

impl<T: std::fmt::Display> std::fmt::Debug for HMap<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Log1p => write!(f, "HMap::Log1p"),
            Self::General(u) => write!(f, "HMap::General({u})"),
        }
    }
}

impl<T: Scalar> HMap<T> {
    pub fn for_utility(u: &UtilityFunction<T>) -> Result<Self> {
        match u {
            UtilityFunction::Log1p => Ok(Self::Log1p),
            other => {
                other.check_root_condition()?;
                Ok(Self::General(other.clone()))
            }
        }
    }

    /// Probability interval on which the inverse is taken.
    pub fn domain(&self) -> (T, T) {
        match self {
            Self::Log1p => (T::zero(), T::one()),
            Self::General(_) => (lit(0.25), lit(0.75)),
        }
    }

    /// `h(q)` for `q` in `[0, 1]`.
    pub fn eval(&self, q: T) -> Result<T> {
        check_range("q", to_f64(q), 0.0, 1.0, "[0, 1]")?;
        match self {
            Self::Log1p => Ok(h_unchecked(q)),
            Self::General(u) => bisect_r(q, u),
        }
    }

    /// `h^{-1}` of `z` after projecting `z` onto `h(domain)`.
    pub fn inverse_clamped(&self, z: T) -> Result<T> {
        match self {
            Self::Log1p => Ok(h_inverse_clamped(z)),
            Self::General(u) => {
                let (lo, hi) = self.domain();
                let (h_lo, h_hi) = (bisect_r(lo, u)?, bisect_r(hi, u)?);
                if z <= h_lo {
                    return Ok(lo);
                }
                if z >= h_hi {
                    return Ok(hi);
                }
                Ok(bisect(
                    |q| bisect_r(q, u).map(|r| r - z).unwrap_or(T::nan()),
                    lo,
                    hi,
                    true,
                    T::root_tol(),
                ))
            }
        }
    }
}

/// Smallest finite-difference slope of the solved `h` over a grid of
/// `[q_lo, q_hi]` with step at most `1e-3`.
///
/// Central differences are used where the stencil fits inside `[0, 1]`,
/// one-sided differences at the ends. Fails if any slope is not positive.
pub fn numeric_beta<T: Scalar>(u: &UtilityFunction<T>, q_lo: T, q_hi: T) -> Result<T> {
    check_range("q_lo", to_f64(q_lo), 0.0, 1.0, "[0, 1]")?;
    check_range("q_hi", to_f64(q_hi), to_f64(q_lo), 1.0, "[q_lo, 1]")?;
    let h = HMap::for_utility(u)?;
    let d = lit::<T>(1e-5).max(T::epsilon().sqrt());
    let steps = ((to_f64(q_hi - q_lo) / 1e-3).ceil() as usize).max(1);
    let mut best = T::infinity();
    for k in 0..=steps {
        let q = q_lo + (q_hi - q_lo) * count::<T>(k) / count::<T>(steps);
        let a = (q - d).max(T::zero());
        let b = (q + d).min(T::one());
        let slope = (h.eval(b)? - h.eval(a)?) / (b - a);
        if !(slope > T::zero()) {
            return Err(Error::Assumption(format!("h'({q}) ~ {slope} is not positive")));
        }
        best = best.min(slope);
    }
    Ok(best)
}

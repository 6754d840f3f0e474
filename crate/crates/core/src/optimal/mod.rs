//! One-shot expectation region, the optimal operating point, and the
//! increasing map `h` from channel probability to optimal curve parameter.

mod general;
mod hmap;
mod region;

pub use general::{numeric_beta, solve_general_r, HMap};
pub use hmap::{beta, h_derivative, h_eval, h_inverse, h_range, optimal_r_closed_form};
pub use region::{region_contains, region_decompose, region_optimum, Mixture, RegionSpec};

use crate::error::{check_range, Error, Result};
use crate::scalar::{to_f64, Scalar};
use crate::system::{RatePoint, UtilityFunction};

/// Maximizer of the utility over the one-shot region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalPoint<T> {
    pub r_star: T,
    pub x_star: RatePoint<T>,
    pub phi_star: T,
}

/// Optimal curve parameter, operating point and utility for channel
/// probability `q` in `(0, 1]`.
///
/// The log1p utility uses the closed form; separable utilities that pass
/// [`UtilityFunction::check_root_condition`] are solved by bisection.
pub fn optimal_point<T: Scalar>(q: T, u: &UtilityFunction<T>) -> Result<OptimalPoint<T>> {
    check_range("q", to_f64(q), f64::MIN_POSITIVE, 1.0, "(0, 1]")?;
    let r_star = match u {
        UtilityFunction::Log1p => optimal_r_closed_form(q)?,
        UtilityFunction::Min => {
            return Err(Error::Assumption("min utility is not separable and differentiable".into()))
        }
        _ => {
            u.check_root_condition()?;
            general::bisect_r(q, u)?
        }
    };
    let x_star = RegionSpec::new(q)?.boundary(r_star);
    Ok(OptimalPoint {
        r_star,
        x_star,
        phi_star: u.value(&x_star),
    })
}

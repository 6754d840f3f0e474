//! Channel process, decision sets, utilities, and per-run bookkeeping for
//! the two-user example system.

mod point;
mod trace;
mod utility;

pub use point::{decision_set_point, shannon_fdm_point, RatePoint};
pub use trace::{generate_trace, ChannelTrace, RunRecord};
pub use utility::{Component, SeparableUtility, UtilityFunction};

/// The rate vector forced when the second user is offline.
pub fn forced_decision<T: crate::Scalar>() -> RatePoint<T> {
    RatePoint::new_unchecked(T::one(), T::zero())
}

//! Simulation and numerical verification lab for two-user opportunistic
//! scheduling.
//!
//! The pure math (decision sets, region geometry, the `h` map, information
//! metrics, estimation errors) is generic over [`Scalar`] (`f32` or `f64`).
//! Monte-Carlo simulation runs in `f64`; the aliases below name the `f64`
//! instantiations used throughout the simulation code.

pub mod cli;
pub mod converse;
pub mod error;
pub mod estimation;
pub mod golden;
pub mod info;
pub mod optimal;
pub mod schedulers;
pub mod rng;
pub mod scalar;
pub mod system;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type RatePoint = system::RatePoint<f64>;
pub type RatePoint32 = system::RatePoint<f32>;
pub type Utility = system::UtilityFunction<f64>;
pub type Utility32 = system::UtilityFunction<f32>;
pub type OptimalPoint = optimal::OptimalPoint<f64>;
pub type RegionSpec = optimal::RegionSpec<f64>;

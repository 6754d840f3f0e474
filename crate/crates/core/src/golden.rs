//! Regression against committed reference values.
//!
//! A fixture file is TOML with one table per quantity:
//!
//! ```toml
//! [r_half]
//! value = 0.4142135623730950488
//! tol = 1e-12
//! what = "optimal r at q = 1/2"
//! ```
//!
//! Each name maps to a computation through the public API in [`compute`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::converse::measure_threshold;
use crate::error::{Error, Result};
use crate::estimation::{
    constant_gap, epsilon_n, exact_expected_error, theorem2_constants, truncation_cap, two_point_bound_check, v_m, EstimatorSpec,
};
use crate::info::{kl_bernoulli, kl_product, pinsker_check, tv_exact};
use crate::optimal::{beta, h_derivative, h_eval, numeric_beta, optimal_point};
use crate::schedulers::greedy_r;
use crate::system::{shannon_fdm_point, RatePoint, UtilityFunction};

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Fixture {
    pub value: f64,
    pub tol: f64,
    #[serde(default)]
    pub what: String,
}

pub type FixtureSet = BTreeMap<String, Fixture>;

pub fn load_fixtures(path: &Path) -> Result<FixtureSet> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Recomputes the quantity called `name`.
pub fn compute(name: &str) -> Result<f64> {
    let log1p = UtilityFunction::<f64>::Log1p;
    let empirical = EstimatorSpec::<f64>::empirical_mean();
    let c = (8.0f64 / 3.0).sqrt();
    Ok(match name {
        "r_half" => h_eval(0.5)?,
        "r_one" => h_eval(1.0)?,
        "h_prime_zero" => h_derivative(0.0)?,
        "beta" => beta(),
        "phi_star_half" => optimal_point(0.5, &log1p)?.phi_star,
        "x_star_one_x2" => optimal_point(1.0, &log1p)?.x_star.x2,
        "numeric_beta_mid" => numeric_beta(&log1p, 0.25, 0.75)?,
        "shannon_full" => shannon_fdm_point(1.0, 0.7, 3.0)?.x1,
        "shannon_half" => shannon_fdm_point(0.5, 0.7, 3.0)?.x1,
        "log1p_ones" => log1p.value(&RatePoint::new(1.0, 1.0)?),
        "greedy_avg_x1" | "greedy_avg_x2" => {
            let r = greedy_r(&log1p);
            if name.ends_with("x1") {
                0.5 + 0.5 * r
            } else {
                0.5 * (1.0 - r * r)
            }
        }
        "greedy_certified_gap" => beta::<f64>().powi(2) / 8.0 * 0.25,
        "measure_threshold" => measure_threshold(),
        "epsilon_one" => epsilon_n(1),
        "truncation_cap_one" => truncation_cap(1, 2.0),
        "two_point_lhs" => two_point_bound_check(&empirical, 0.25, 0.25 + 1.0 / (2.0 * c), 1, 2.0)?.lhs,
        "mse_half_four" => exact_expected_error(&empirical, 0.5, 4, 2.0)?,
        "v_three_two" => v_m(3, 2.0),
        "lower_const_alpha2" => theorem2_constants(2.0)?.threshold,
        "lower_const_alpha1" => theorem2_constants(1.0)?.alpha1_threshold.unwrap_or(f64::NAN),
        "gap_alpha2" => constant_gap(2.0, 22)?.ratio,
        "gap_alpha1" => constant_gap(1.0, 22)?.ratio,
        "kl_half_quarter_two" => kl_product(0.5, 0.25, 2)?,
        "kl_three_quarter_one" => kl_product(0.75, 0.25, 1)?,
        "kl_counterexample" => kl_bernoulli(0.5, 0.5 + 1.0 / 16.0)?,
        "tv_half_quarter_two" => tv_exact(0.5, 0.25, 2)?,
        "tv_half_055_ten" => tv_exact(0.5, 0.55, 10)?,
        "pinsker_half_quarter_two" => pinsker_check(0.5, 0.25, 2)?.bound,
        _ => return Err(Error::Config(format!("unknown fixture {name:?}"))),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: String,
    pub expected: f64,
    pub actual: Option<f64>,
    pub tol: f64,
    pub error: Option<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        matches!(self.actual, Some(a) if (a - self.expected).abs() <= self.tol)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "ok" } else { "MISMATCH" };
        match (&self.actual, &self.error) {
            (Some(a), _) => write!(
                f,
                "{status} {}: expected {} got {} (|diff| {:.3e}, tol {:.0e})",
                self.name,
                self.expected,
                a,
                (a - self.expected).abs(),
                self.tol
            ),
            (None, Some(e)) => write!(f, "{status} {}: {e}", self.name),
            (None, None) => write!(f, "{status} {}", self.name),
        }
    }
}

/// Recomputes every fixture and compares within its tolerance.
pub fn golden_regression(fixtures: &FixtureSet) -> Vec<Outcome> {
    fixtures
        .iter()
        .map(|(name, fx)| {
            let (actual, error) = match compute(name) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Outcome {
                name: name.clone(),
                expected: fx.value,
                actual,
                tol: fx.tol,
                error,
            }
        })
        .collect()
}

//! Statistics-unaware scheduling policies and the genie baseline.
//!
//! Every policy answers two questions each slot: which `r` it would play if
//! the second user were online (the counterfactual query, side-effect free),
//! and what it actually plays once the state is revealed (`advance`).

use std::fmt;
use std::str::FromStr;

use crate::error::{check_range, Error, Result};
use crate::optimal::{h_eval, optimal_point, region_optimum, RegionSpec};
use crate::scalar::{bisect, clamp, golden_max};
use crate::system::{forced_decision, ChannelTrace, RatePoint, RunRecord, UtilityFunction};

type Utility = UtilityFunction<f64>;

/// Lower clamp applied to plug-in and genie probabilities before solving
/// for the optimal `r`.
pub const Q_FLOOR: f64 = 1e-9;

/// Probability guess used by the plug-in policy before any observation.
pub const PLUGIN_PRIOR: f64 = 0.5;

/// Frank-Wolfe starting iterate.
pub const FW_INIT: RatePoint<f64> = RatePoint::new_unchecked(0.5, 0.5);

/// A scheduling policy.
pub trait Scheduler: Send {
    /// Mean `r` the policy would play this slot if `S[t] = 1`.
    fn counterfactual_r(&self) -> f64;

    fn is_randomized(&self) -> bool {
        false
    }

    /// The `k`-th independent draw of `r` conditional on the current
    /// history, without touching the policy's own randomness.
    fn conditional_draw(&self, _k: u64) -> f64 {
        self.counterfactual_r()
    }

    /// The `r` actually played when `S[t] = 1`. May consume randomness.
    fn play_r(&mut self) -> f64 {
        self.counterfactual_r()
    }

    /// Updates internal state after slot `t` with state `s` and decision `x`.
    fn observe(&mut self, s: u8, x: RatePoint<f64>);
}

/// Parsed policy description: `greedy`, `plugin`, `fw-vanishing`,
/// `fw-constant:<eta>` or `genie:<q>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    Greedy,
    PlugIn,
    FwVanishing,
    FwConstant(f64),
    Genie(f64),
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Greedy => write!(f, "greedy"),
            Self::PlugIn => write!(f, "plugin"),
            Self::FwVanishing => write!(f, "fw-vanishing"),
            Self::FwConstant(eta) => write!(f, "fw-constant:{eta}"),
            Self::Genie(q) => write!(f, "genie:{q}"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            what: "policy",
            input: s.to_string(),
        };
        let spec = match s.trim().split_once(':') {
            None => match s.trim() {
                "greedy" => Self::Greedy,
                "plugin" => Self::PlugIn,
                "fw-vanishing" => Self::FwVanishing,
                _ => return Err(bad()),
            },
            Some(("fw-constant", v)) => Self::FwConstant(v.trim().parse().map_err(|_| bad())?),
            Some(("genie", v)) => Self::Genie(v.trim().parse().map_err(|_| bad())?),
            Some(_) => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl PolicySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::FwConstant(eta) => {
                if !(eta > 0.0 && eta < 1.0) {
                    return Err(Error::OutOfRange {
                        name: "eta",
                        value: eta,
                        range: "(0, 1)",
                    });
                }
            }
            Self::Genie(q) => check_range("q", q, 0.0, 1.0, "[0, 1]")?,
            _ => {}
        }
        Ok(())
    }

    /// Whether the policy knows the channel probability.
    pub fn is_statistics_aware(&self) -> bool {
        matches!(self, Self::Genie(_))
    }

    pub fn build(&self, u: &Utility) -> Result<SchedulerState> {
        self.validate()?;
        let policy: Box<dyn Scheduler> = match *self {
            Self::Greedy => Box::new(Greedy::new(u)?),
            Self::PlugIn => Box::new(PlugIn::new(u)?),
            Self::FwVanishing => Box::new(FrankWolfe::new(u, Stepsize::Vanishing)?),
            Self::FwConstant(eta) => Box::new(FrankWolfe::new(u, Stepsize::Constant(eta))?),
            Self::Genie(q) => Box::new(Genie::new(u, q)?),
        };
        Ok(SchedulerState::new(policy))
    }
}

/// Optimal stationary `r` for probability `q` under `u`.
///
/// Closed form for log1p, bisection for utilities meeting the concavity
/// assumptions, golden-section search along the boundary otherwise.
pub fn stationary_r(q: f64, u: &Utility) -> Result<f64> {
    let q = clamp(q, Q_FLOOR, 1.0);
    match u {
        UtilityFunction::Log1p => h_eval(q),
        other if other.check_root_condition().is_ok() => Ok(optimal_point(q, other)?.r_star),
        other => Ok(region_optimum(&RegionSpec::new(q)?, other).0),
    }
}

/// The `r` maximizing `phi(r, 1 - r^2)` for a single slot.
pub fn greedy_r(u: &Utility) -> f64 {
    if !u.is_differentiable() {
        return golden_max(|r| u.value(&RatePoint::new_unchecked(r, 1.0 - r * r)), 0.0, 1.0, 1e-12);
    }
    // d/dr phi(r, 1 - r^2) = phi1'(r) - 2 r phi2'(1 - r^2), nonincreasing for concave phi.
    let slope = |r: f64| u.d1(1, r).unwrap_or(f64::NAN) - 2.0 * r * u.d1(2, 1.0 - r * r).unwrap_or(f64::NAN);
    if slope(1.0) >= 0.0 {
        1.0
    } else if slope(0.0) <= 0.0 {
        0.0
    } else {
        bisect(slope, 0.0, 1.0, false, 1e-13)
    }
}

/// Maximizes `phi(X)` slot by slot: a constant `r`.
#[derive(Debug, Clone)]
pub struct Greedy {
    r: f64,
}

impl Greedy {
    pub fn new(u: &Utility) -> Result<Self> {
        Ok(Self { r: greedy_r(u) })
    }
}

impl Scheduler for Greedy {
    fn counterfactual_r(&self) -> f64 {
        self.r
    }

    fn observe(&mut self, _s: u8, _x: RatePoint<f64>) {}
}

/// Plays the optimal stationary `r` for the empirical frequency of `S = 1`.
#[derive(Debug, Clone)]
pub struct PlugIn {
    utility: Utility,
    slots: u64,
    ones: u64,
    r: f64,
}

impl PlugIn {
    pub fn new(u: &Utility) -> Result<Self> {
        Ok(Self {
            utility: u.clone(),
            slots: 0,
            ones: 0,
            r: stationary_r(PLUGIN_PRIOR, u)?,
        })
    }

    /// Current estimate of `q`: the prior before any slot, then `ones / slots`.
    pub fn estimate(&self) -> f64 {
        if self.slots == 0 {
            PLUGIN_PRIOR
        } else {
            self.ones as f64 / self.slots as f64
        }
    }
}

impl Scheduler for PlugIn {
    fn counterfactual_r(&self) -> f64 {
        self.r
    }

    fn observe(&mut self, s: u8, _x: RatePoint<f64>) {
        self.slots += 1;
        self.ones += u64::from(s);
        // The utility passed construction, so the solve cannot fail.
        self.r = stationary_r(self.estimate(), &self.utility).unwrap_or(self.r);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepsize {
    /// `eta_t = 1 / (t + 1)`.
    Vanishing,
    Constant(f64),
}

/// Stochastic Frank-Wolfe on the time average: each slot picks the decision
/// maximizing `grad phi(xbar) . X` over `D(S[t])`, then moves `xbar` toward it.
#[derive(Debug, Clone)]
pub struct FrankWolfe {
    utility: Utility,
    step: Stepsize,
    slot: u64,
    xbar: RatePoint<f64>,
}

impl FrankWolfe {
    pub fn new(u: &Utility, step: Stepsize) -> Result<Self> {
        if !u.is_differentiable() {
            return Err(Error::Capability("Frank-Wolfe gradient"));
        }
        Ok(Self {
            utility: u.clone(),
            step,
            slot: 0,
            xbar: FW_INIT,
        })
    }

    pub fn iterate(&self) -> RatePoint<f64> {
        self.xbar
    }
}

/// `argmax_{r in [0,1]} g1 r + g2 (1 - r^2)`.
pub fn linear_oracle_r(g: RatePoint<f64>) -> f64 {
    if g.x2 > 0.0 {
        clamp(g.x1 / (2.0 * g.x2), 0.0, 1.0)
    } else if g.x1 > 0.0 {
        1.0
    } else {
        0.0
    }
}

impl Scheduler for FrankWolfe {
    fn counterfactual_r(&self) -> f64 {
        let g = self.utility.gradient(&self.xbar).expect("differentiable utility");
        linear_oracle_r(g)
    }

    fn observe(&mut self, _s: u8, x: RatePoint<f64>) {
        let eta = match self.step {
            Stepsize::Vanishing => 1.0 / (self.slot as f64 + 1.0),
            Stepsize::Constant(eta) => eta,
        };
        self.xbar = self.xbar.lerp(&x, eta);
        self.slot += 1;
    }
}

/// Knows `q` and always plays the optimal stationary `r`.
#[derive(Debug, Clone)]
pub struct Genie {
    r: f64,
}

impl Genie {
    pub fn new(u: &Utility, q: f64) -> Result<Self> {
        check_range("q", q, 0.0, 1.0, "[0, 1]")?;
        Ok(Self { r: stationary_r(q, u)? })
    }
}

impl Scheduler for Genie {
    fn counterfactual_r(&self) -> f64 {
        self.r
    }

    fn observe(&mut self, _s: u8, _x: RatePoint<f64>) {}
}

/// Number of conditional draws averaged to estimate the counterfactual mean
/// of a randomized policy.
pub const CONDITIONAL_DRAWS: u64 = 64;

/// A policy together with its slot counter and running sum of decisions.
pub struct SchedulerState {
    policy: Box<dyn Scheduler>,
    slot: usize,
    sum: RatePoint<f64>,
}

impl SchedulerState {
    pub fn new(policy: Box<dyn Scheduler>) -> Self {
        Self {
            policy,
            slot: 0,
            sum: RatePoint::new_unchecked(0.0, 0.0),
        }
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn counterfactual_r(&self) -> f64 {
        self.policy.counterfactual_r()
    }

    /// `E[X1[t] | S[t] = 1, history]`: exact for deterministic policies,
    /// a mean of conditional draws for randomized ones.
    pub fn conditional_mean_r(&self) -> f64 {
        self.conditional_moments().0
    }

    /// First and second conditional moments of the `r` played if `S[t] = 1`.
    pub fn conditional_moments(&self) -> (f64, f64) {
        if self.policy.is_randomized() {
            let (s1, s2) = (0..CONDITIONAL_DRAWS)
                .map(|k| clamp(self.policy.conditional_draw(k), 0.0, 1.0))
                .fold((0.0, 0.0), |(a, b), r| (a + r, b + r * r));
            let n = CONDITIONAL_DRAWS as f64;
            (s1 / n, s2 / n)
        } else {
            let r = self.policy.counterfactual_r();
            (r, r * r)
        }
    }

    /// Plays slot `t` with state `s`.
    pub fn advance(&mut self, s: u8) -> RatePoint<f64> {
        let x = if s == 0 {
            forced_decision()
        } else {
            let r = clamp(self.policy.play_r(), 0.0, 1.0);
            RatePoint::new_unchecked(r, 1.0 - r * r)
        };
        self.policy.observe(s, x);
        self.slot += 1;
        self.sum = self.sum + x;
        x
    }

    /// Mean of all decisions so far.
    pub fn running_average(&self) -> RatePoint<f64> {
        if self.slot == 0 {
            return self.sum;
        }
        self.sum * (1.0 / self.slot as f64)
    }
}

/// Runs a policy over a whole trace, recording decisions and the
/// counterfactual `r` queried before each slot.
pub fn run_policy(mut state: SchedulerState, trace: &ChannelTrace) -> RunRecord {
    let mut decisions = Vec::with_capacity(trace.horizon());
    let mut z_series = Vec::with_capacity(trace.horizon());
    for &s in &trace.states {
        z_series.push(state.conditional_mean_r());
        decisions.push(state.advance(s));
    }
    RunRecord {
        trace: trace.clone(),
        running_average: state.running_average(),
        decisions,
        z_series,
        theta_series: Vec::new(),
    }
}

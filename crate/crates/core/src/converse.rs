//! Reduction from scheduling to Bernoulli estimation.
//!
//! Before each slot a policy's conditional choice `z = E[X1[t] | S[t]=1,
//! history]` is projected onto `[h(0), h(1)]` and mapped through `h^{-1}`,
//! giving an estimate `theta[t]` of `q` built from the first `t` channel
//! states. The harness measures the utility gap of `phi(E[Xbar(T)])` and
//! checks it against `(beta^2 / 8T) sum_{t>=1} E[(theta[t] - q)^2]`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{check_range, Error, Result};
use crate::optimal::{beta, optimal_point, HMap};
use crate::rng::{derive_seed, stream};
use crate::schedulers::{PolicySpec, SchedulerState};
use crate::system::{generate_trace, RatePoint, RunRecord, UtilityFunction};

type Utility = UtilityFunction<f64>;

/// `theta = h^{-1}(clamp(z, h(0), h(1)))`.
pub fn theta_of_slot(z: f64, h: &HMap<f64>) -> Result<f64> {
    check_range("z", z, 0.0, 1.0, "[0, 1]")?;
    h.inverse_clamped(z)
}

/// Fills `theta_series` for slots `t >= 1` of a run.
pub fn fill_theta(record: &mut RunRecord, h: &HMap<f64>) -> Result<()> {
    record.theta_series = record
        .z_series
        .iter()
        .skip(1)
        .map(|&z| theta_of_slot(z, h))
        .collect::<Result<_>>()?;
    Ok(())
}

/// `3 beta^2 / 2^13`, the scaled-gap threshold of the measure statement.
pub fn measure_threshold() -> f64 {
    3.0 * beta::<f64>().powi(2) / 8192.0
}

/// How each replication contributes to the estimate of `E[Xbar(T)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanEstimator {
    /// `(1/T) sum_t (1 - q + q E[X1|S=1,F], q (1 - E[X1^2|S=1,F]))`:
    /// the conditional expectation of each slot given the history, which
    /// removes the channel sampling noise of the current slot.
    #[default]
    Conditional,
    /// The realized time average `Xbar(T)`.
    Realized,
}

impl fmt::Display for MeanEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Conditional => "conditional",
            Self::Realized => "realized",
        })
    }
}

impl FromStr for MeanEstimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "conditional" => Ok(Self::Conditional),
            "realized" => Ok(Self::Realized),
            _ => Err(Error::Parse {
                what: "mean estimator",
                input: s.to_string(),
            }),
        }
    }
}

/// Outcome of one replication at one horizon.
#[derive(Debug, Clone, Copy)]
pub struct Replication {
    pub point: RatePoint<f64>,
    pub theta_sq_sum: f64,
}

/// Runs one replication of `policy` on a fresh trace.
pub fn replicate(
    policy: &PolicySpec,
    u: &Utility,
    h: &HMap<f64>,
    q: f64,
    horizon: usize,
    seed: u64,
    estimator: MeanEstimator,
) -> Result<Replication> {
    replicate_with(policy.build(u)?, h, q, horizon, seed, estimator)
}

/// As [`replicate`], for an already constructed scheduler.
pub fn replicate_with(
    mut state: SchedulerState,
    h: &HMap<f64>,
    q: f64,
    horizon: usize,
    seed: u64,
    estimator: MeanEstimator,
) -> Result<Replication> {
    let trace = generate_trace(q, horizon, seed)?;
    let mut cond = RatePoint::new_unchecked(0.0, 0.0);
    let mut theta_sq_sum = 0.0;
    for (t, &s) in trace.states.iter().enumerate() {
        let (m1, m2) = state.conditional_moments();
        if t >= 1 {
            let theta = h.inverse_clamped(m1)?;
            theta_sq_sum += (theta - q) * (theta - q);
        }
        cond = cond + RatePoint::new_unchecked(1.0 - q + q * m1, q * (1.0 - m2));
        state.advance(s);
    }
    let point = match estimator {
        MeanEstimator::Conditional => cond * (1.0 / horizon as f64),
        MeanEstimator::Realized => state.running_average(),
    };
    Ok(Replication { point, theta_sq_sum })
}

/// Aggregated gap statistics at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub horizon: usize,
    /// `phi` of the across-replication mean point.
    pub phi_hat: f64,
    /// Delta-method standard error of `phi_hat`.
    pub se: f64,
    pub gap: f64,
    /// `T gap / log T`.
    pub scaled_gap: f64,
    /// Mean over replications of `sum_{t=1}^{T-1} (theta[t] - q)^2`.
    pub theta_sq_sum: f64,
    /// `(beta^2 / 8T) theta_sq_sum`.
    pub bound_rhs: f64,
    /// Standard error of `phi_hat + bound_rhs`.
    pub combined_se: f64,
    pub mean_point: RatePoint<f64>,
}

impl GapRow {
    /// `phi_hat <= phi* - bound_rhs + 3 combined_se`.
    pub fn bound_holds(&self, phi_star: f64) -> bool {
        self.phi_hat <= phi_star - self.bound_rhs + 3.0 * self.combined_se + 1e-12
    }

    /// Set when the Monte-Carlo error exceeds a tenth of the gap.
    pub fn noisy(&self) -> bool {
        self.se > 0.1 * self.gap.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSeries {
    pub q: f64,
    pub policy: PolicySpec,
    pub replications: usize,
    pub estimator: MeanEstimator,
    pub phi_star: f64,
    pub rows: Vec<GapRow>,
}

impl GapSeries {
    pub fn warnings(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| r.noisy())
            .map(|r| {
                format!(
                    "T={}: standard error {:.3e} exceeds 10% of the gap {:.3e}",
                    r.horizon, r.se, r.gap
                )
            })
            .collect()
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Builds a row from replication outcomes using the log1p utility.
pub fn aggregate(reps: &[Replication], horizon: usize, phi_star: f64) -> GapRow {
    let u = Utility::Log1p;
    let n = reps.len() as f64;
    let mean_point = reps
        .iter()
        .fold(RatePoint::new_unchecked(0.0, 0.0), |acc, r| acc + r.point)
        * (1.0 / n);
    let phi_hat = u.value(&mean_point);
    let grad = u.gradient(&mean_point).expect("log1p is differentiable");
    let weight = beta::<f64>().powi(2) / (8.0 * horizon as f64);
    let linear: Vec<f64> = reps.iter().map(|r| grad.dot(&r.point)).collect();
    let combined: Vec<f64> = reps.iter().map(|r| grad.dot(&r.point) + weight * r.theta_sq_sum).collect();
    let thetas: Vec<f64> = reps.iter().map(|r| r.theta_sq_sum).collect();
    let root_n = n.sqrt();
    let se = mean_sd(&linear).1 / root_n;
    let combined_se = mean_sd(&combined).1 / root_n;
    let theta_sq_sum = mean_sd(&thetas).0;
    let gap = phi_star - phi_hat;
    let t = horizon as f64;
    GapRow {
        horizon,
        phi_hat,
        se,
        gap,
        scaled_gap: if horizon >= 2 { t * gap / t.ln() } else { f64::NAN },
        theta_sq_sum,
        bound_rhs: weight * theta_sq_sum,
        combined_se,
        mean_point,
    }
}

/// Runs `replications` independent replications of `policy` at each horizon
/// for the log1p utility and summarizes the utility gap against the
/// estimation bound.
///
/// Replication `i` at horizon index `j` uses the trace seed
/// `derive_seed(master_seed, [j, i])`.
pub fn gap_experiment(
    policy: PolicySpec,
    q: f64,
    horizons: &[usize],
    replications: usize,
    master_seed: u64,
    estimator: MeanEstimator,
) -> Result<GapSeries> {
    check_range("q", q, 0.25, 0.75, "[1/4, 3/4]")?;
    if replications == 0 {
        return Err(Error::OutOfRange {
            name: "replications",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    if let Some(&bad) = horizons.iter().find(|&&t| t < 2) {
        return Err(Error::OutOfRange {
            name: "horizon",
            value: bad as f64,
            range: "[2, inf)",
        });
    }
    let u = Utility::Log1p;
    let h = HMap::Log1p;
    let phi_star = optimal_point(q, &u)?.phi_star;
    let rows = horizons
        .iter()
        .enumerate()
        .map(|(j, &horizon)| {
            let reps = (0..replications)
                .into_par_iter()
                .map(|i| {
                    let seed = derive_seed(master_seed, &[j as u64, i as u64]);
                    replicate(&policy, &u, &h, q, horizon, seed, estimator)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(aggregate(&reps, horizon, phi_star))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GapSeries {
        q,
        policy,
        replications,
        estimator,
        phi_star,
        rows,
    })
}

/// Scaled gaps at uniformly sampled channel probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub policy: PolicySpec,
    pub horizon: usize,
    pub replications: usize,
    pub threshold: f64,
    /// `(q, scaled_gap)` sorted by scaled gap.
    pub samples: Vec<(f64, f64)>,
    /// Fraction of samples with scaled gap at least `threshold`.
    pub fraction: f64,
}

/// Samples `k` probabilities uniformly on `[1/4, 3/4]`, measures the scaled
/// gap of `policy` at horizon `horizon` for each, and reports the fraction at
/// or above `3 beta^2 / 2^13`.
///
/// This is a single finite-horizon evaluation standing in for a limsup.
/// A `genie` policy is re-targeted to each sampled probability.
pub fn measure_experiment(
    policy: PolicySpec,
    k: usize,
    horizon: usize,
    replications: usize,
    master_seed: u64,
    estimator: MeanEstimator,
) -> Result<MeasureReport> {
    if k == 0 {
        return Err(Error::OutOfRange {
            name: "K",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    let mut rng = stream(derive_seed(master_seed, &[u64::MAX]));
    let qs: Vec<f64> = (0..k).map(|_| rng.random_range(0.25..=0.75)).collect();
    let mut samples = qs
        .par_iter()
        .enumerate()
        .map(|(i, &q)| {
            let p = match policy {
                PolicySpec::Genie(_) => PolicySpec::Genie(q),
                other => other,
            };
            let series = gap_experiment(p, q, &[horizon], replications, derive_seed(master_seed, &[i as u64]), estimator)?;
            Ok((q, series.rows[0].scaled_gap))
        })
        .collect::<Result<Vec<_>>>()?;
    samples.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    let threshold = measure_threshold();
    let hits = samples.iter().filter(|s| s.1 >= threshold).count();
    Ok(MeasureReport {
        policy,
        horizon,
        replications,
        threshold,
        fraction: hits as f64 / k as f64,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimal::{h_eval, h_range};
    use crate::schedulers::{run_policy, Scheduler};
    use crate::system::ChannelTrace;
    use rand::SeedableRng;

    #[test]
    fn theta_examples() {
        let h = HMap::Log1p;
        assert_eq!(theta_of_slot(0.1, &h).unwrap(), 0.0);
        assert!((theta_of_slot(h_eval(0.6).unwrap(), &h).unwrap() - 0.6).abs() < 1e-10);
        assert_eq!(theta_of_slot(0.9, &h).unwrap(), 1.0);
        assert_eq!(theta_of_slot(h_range::<f64>().1, &h).unwrap(), 1.0);
        assert!(theta_of_slot(1.2, &h).is_err());
    }

    #[test]
    fn threshold_constant() {
        let b: f64 = 2.0 / 3.0 - 7f64.sqrt() / 6.0;
        assert!((measure_threshold() - 3.0 * b * b / 8192.0).abs() < 1e-20);
        assert!((measure_threshold() - 1.8657e-5).abs() < 1e-8);
    }

    #[test]
    fn genie_saturates_the_bound() {
        let s = gap_experiment(PolicySpec::Genie(0.5), 0.5, &[100, 1000], 20, 1, MeanEstimator::Conditional).unwrap();
        for row in &s.rows {
            assert!(row.theta_sq_sum < 1e-18, "{row:?}");
            assert!(row.gap.abs() < 1e-12);
            assert!(row.bound_holds(s.phi_star));
        }
        let r = gap_experiment(PolicySpec::Genie(0.5), 0.5, &[1000], 50, 1, MeanEstimator::Realized).unwrap();
        assert!(r.rows[0].bound_holds(r.phi_star));
    }

    #[test]
    fn greedy_certified_gap() {
        let t = 1000;
        let s = gap_experiment(PolicySpec::Greedy, 0.5, &[t], 10, 3, MeanEstimator::Conditional).unwrap();
        let row = &s.rows[0];
        let b: f64 = 2.0 / 3.0 - 7f64.sqrt() / 6.0;
        assert!((row.theta_sq_sum - 0.25 * (t - 1) as f64).abs() < 1e-9);
        assert!((row.bound_rhs - b * b / 8.0 * 0.25 * (t - 1) as f64 / t as f64).abs() < 1e-12);
        let greedy_phi = Utility::Log1p.value(&RatePoint::new_unchecked(0.774_291_885_177_431_9, 0.349_527_923_451_621_1));
        assert!((row.phi_hat - greedy_phi).abs() < 1e-12);
        assert!(row.gap > row.bound_rhs);
    }

    #[test]
    fn plugin_theta_is_empirical_frequency() {
        let trace = generate_trace(0.35, 400, 9).unwrap();
        let mut rec = run_policy(PolicySpec::PlugIn.build(&Utility::Log1p).unwrap(), &trace);
        fill_theta(&mut rec, &HMap::Log1p).unwrap();
        let mut ones = 0usize;
        for (t, theta) in rec.theta_series.iter().enumerate() {
            ones += trace.states[t] as usize;
            let freq = (ones as f64 / (t + 1) as f64).max(crate::schedulers::Q_FLOOR);
            assert!((theta - freq).abs() < 1e-9, "t = {}", t + 1);
        }
    }

    #[test]
    fn theta_depends_only_on_prefix() {
        let a = generate_trace(0.5, 300, 1).unwrap();
        let mut states = a.states[..150].to_vec();
        states.extend(generate_trace(0.5, 150, 2).unwrap().states);
        let b = ChannelTrace::from_states(0.5, 0, states).unwrap();
        for spec in [PolicySpec::PlugIn, PolicySpec::FwVanishing, PolicySpec::FwConstant(0.05)] {
            let mut ra = run_policy(spec.build(&Utility::Log1p).unwrap(), &a);
            let mut rb = run_policy(spec.build(&Utility::Log1p).unwrap(), &b);
            fill_theta(&mut ra, &HMap::Log1p).unwrap();
            fill_theta(&mut rb, &HMap::Log1p).unwrap();
            // theta[t] uses S[0..t-1]; series index i holds theta[i + 1].
            assert_eq!(ra.theta_series[..150], rb.theta_series[..150]);
        }
    }

    /// Plays greedy's r plus or minus a dither with equal probability.
    struct Dithered {
        base: f64,
        width: f64,
        slot: u64,
        seed: u64,
        rng: rand_chacha::ChaCha8Rng,
    }

    impl Scheduler for Dithered {
        fn counterfactual_r(&self) -> f64 {
            self.base
        }
        fn is_randomized(&self) -> bool {
            true
        }
        fn conditional_draw(&self, k: u64) -> f64 {
            let mut rng = stream(derive_seed(self.seed, &[self.slot, k]));
            if rng.random::<bool>() { self.base + self.width } else { self.base - self.width }
        }
        fn play_r(&mut self) -> f64 {
            if self.rng.random::<bool>() { self.base + self.width } else { self.base - self.width }
        }
        fn observe(&mut self, _s: u8, _x: RatePoint<f64>) {
            self.slot += 1;
        }
    }

    #[test]
    fn randomized_policy_uses_conditional_draws() {
        let make = || {
            SchedulerState::new(Box::new(Dithered {
                base: 0.45,
                width: 0.1,
                slot: 0,
                seed: 5,
                rng: rand_chacha::ChaCha8Rng::seed_from_u64(77),
            }))
        };
        let st = make();
        let (m1, m2) = st.conditional_moments();
        assert!((m1 - 0.45).abs() < 0.1 && m1 != 0.45 || (m1 - 0.45).abs() < 1e-12);
        assert!(m2 >= m1 * m1);
        // Conditional draws do not disturb the realized stream.
        let mut a = make();
        let mut b = make();
        for s in [1u8, 1, 0, 1, 1] {
            a.conditional_moments();
            assert_eq!(a.advance(s), b.advance(s));
        }
        let h = HMap::Log1p;
        let rep = replicate_with(make(), &h, 0.5, 2000, 4, MeanEstimator::Conditional).unwrap();
        let phi_star = optimal_point(0.5, &Utility::Log1p).unwrap().phi_star;
        let row = aggregate(&[rep], 2000, phi_star);
        assert!(row.bound_holds(phi_star));
        assert!(row.theta_sq_sum > 0.0);
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(gap_experiment(PolicySpec::PlugIn, 0.1, &[100], 5, 0, MeanEstimator::Conditional).is_err());
        assert!(gap_experiment(PolicySpec::PlugIn, 0.5, &[1], 5, 0, MeanEstimator::Conditional).is_err());
        assert!(gap_experiment(PolicySpec::PlugIn, 0.5, &[100], 0, 0, MeanEstimator::Conditional).is_err());
        assert!(measure_experiment(PolicySpec::PlugIn, 0, 100, 5, 0, MeanEstimator::Conditional).is_err());
    }

    #[test]
    fn measure_genie_is_excluded_by_zero_gap() {
        let rep = measure_experiment(PolicySpec::Genie(0.5), 6, 500, 4, 3, MeanEstimator::Conditional).unwrap();
        assert_eq!(rep.samples.len(), 6);
        assert_eq!(rep.fraction, 0.0);
        assert!(rep.samples.iter().all(|s| s.1.abs() < 1e-9));
        let plug = measure_experiment(PolicySpec::PlugIn, 6, 500, 20, 3, MeanEstimator::Conditional).unwrap();
        assert!(plug.samples.windows(2).all(|w| w[0].1 <= w[1].1));
        assert!(plug.samples.iter().all(|s| (0.25..=0.75).contains(&s.0)));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| gap_experiment(PolicySpec::FwVanishing, 0.5, &[200], 16, 42, MeanEstimator::Conditional).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}

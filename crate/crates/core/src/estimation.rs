//! Bernoulli parameter estimation: exact expected errors by enumeration,
//! regret series, and the constants of the estimation lower bound.
//!
//! An estimator maps a seed `u` in `[0, 1)` and a binary history
//! `(w1, ..., wn)` to an estimate in `[0, 1]`. Errors are `E_p |A_n - p|^alpha`
//! with `alpha` in `(0, 2]`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{check_range, Error, Result};
use crate::rng::{derive_seed, stream};
use crate::scalar::{count, lit, to_f64, Scalar};

/// Largest `n` accepted by full outcome enumeration.
pub const MAX_ENUM_STEPS: usize = 22;

/// Outcomes per parallel enumeration chunk.
const CHUNK: usize = 1 << 12;

/// Monte-Carlo paths per parallel block.
const MC_BLOCK: usize = 1024;

type EstimatorFn<T> = dyn Fn(T, &[u8]) -> T + Send + Sync;

#[derive(Clone)]
pub enum EstimatorKind<T> {
    /// `(w1 + ... + wn) / n`.
    EmpiricalMean,
    /// Ignores the data.
    Constant(T),
    Custom(Arc<EstimatorFn<T>>),
}

impl<T: fmt::Debug> fmt::Debug for EstimatorKind<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmpiricalMean => f.write_str("EmpiricalMean"),
            Self::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimatorSpec<T> {
    pub kind: EstimatorKind<T>,
    /// Whether the estimator reads its seed `u`.
    pub randomized: bool,
    /// Master seed for the draws of `u`.
    pub seed: u64,
    /// Number of `u` draws averaged over for a randomized estimator.
    pub u_draws: usize,
}

impl<T: Scalar> EstimatorSpec<T> {
    pub fn empirical_mean() -> Self {
        Self::deterministic(EstimatorKind::EmpiricalMean)
    }

    pub fn constant(c: T) -> Result<Self> {
        check_range("constant estimate", to_f64(c), 0.0, 1.0, "[0, 1]")?;
        Ok(Self::deterministic(EstimatorKind::Constant(c)))
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(T, &[u8]) -> T + Send + Sync + 'static,
    {
        Self::deterministic(EstimatorKind::Custom(Arc::new(f)))
    }

    /// A custom estimator that reads `u`; errors are averaged over `u_draws`
    /// seeds, each held fixed for a whole history.
    pub fn randomized<F>(f: F, seed: u64, u_draws: usize) -> Self
    where
        F: Fn(T, &[u8]) -> T + Send + Sync + 'static,
    {
        Self {
            kind: EstimatorKind::Custom(Arc::new(f)),
            randomized: true,
            seed,
            u_draws: u_draws.max(1),
        }
    }

    fn deterministic(kind: EstimatorKind<T>) -> Self {
        Self {
            kind,
            randomized: false,
            seed: 0,
            u_draws: 1,
        }
    }

    /// True when the estimate depends on the history only through its count
    /// of ones, which allows a binomial sum instead of enumeration.
    pub fn is_exchangeable(&self) -> bool {
        !matches!(self.kind, EstimatorKind::Custom(_))
    }

    /// The estimate `A_n(u, w)`; errors if a custom estimator leaves `[0, 1]`.
    pub fn estimate(&self, u: T, history: &[u8]) -> Result<T> {
        let a = match &self.kind {
            EstimatorKind::EmpiricalMean => {
                if history.is_empty() {
                    lit(0.5)
                } else {
                    let ones = history.iter().filter(|&&w| w == 1).count();
                    count::<T>(ones) / count(history.len())
                }
            }
            EstimatorKind::Constant(c) => *c,
            EstimatorKind::Custom(f) => f(u, history),
        };
        check_range("estimate", to_f64(a), 0.0, 1.0, "[0, 1]")?;
        Ok(a)
    }

    /// The estimate given `ones` ones out of `n`; exchangeable kinds only.
    fn estimate_from_count(&self, ones: usize, n: usize) -> T {
        match &self.kind {
            EstimatorKind::EmpiricalMean if n > 0 => count::<T>(ones) / count(n),
            EstimatorKind::EmpiricalMean => lit(0.5),
            EstimatorKind::Constant(c) => *c,
            EstimatorKind::Custom(_) => unreachable!("custom estimators are not exchangeable"),
        }
    }

    /// The seeds `u` the error is averaged over.
    pub fn seeds(&self) -> Vec<T> {
        if !self.randomized {
            return vec![T::zero()];
        }
        (0..self.u_draws)
            .map(|k| lit(stream(derive_seed(self.seed, &[k as u64])).random::<f64>()))
            .collect()
    }
}

impl<T: Scalar> fmt::Display for EstimatorSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            EstimatorKind::EmpiricalMean => f.write_str("empirical-mean"),
            EstimatorKind::Constant(c) => write!(f, "constant:{c}"),
            EstimatorKind::Custom(_) => f.write_str("custom"),
        }
    }
}

impl<T: Scalar> FromStr for EstimatorSpec<T> {
    type Err = Error;

    /// Accepts `empirical-mean` and `constant:<c>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "empirical-mean" {
            return Ok(Self::empirical_mean());
        }
        let parse_err = || Error::Parse {
            what: "estimator",
            input: s.to_string(),
        };
        let c = s
            .strip_prefix("constant:")
            .ok_or_else(parse_err)?
            .trim()
            .parse::<f64>()
            .map_err(|_| parse_err())?;
        Self::constant(lit(c))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
            range: "(0, 2]",
        });
    }
    Ok(())
}

fn check_p<T: Scalar>(p: T) -> Result<()> {
    check_range("p", to_f64(p), 0.0, 1.0, "[0, 1]")
}

/// `E_p |A_n - p|^alpha` by summing over all `2^n` histories.
///
/// This is the reference computation; it makes no use of exchangeability.
pub fn exact_expected_error<T: Scalar>(est: &EstimatorSpec<T>, p: T, n: usize, alpha: T) -> Result<T> {
    check_p(p)?;
    check_alpha(to_f64(alpha))?;
    if n > MAX_ENUM_STEPS {
        return Err(Error::TooLarge(n));
    }
    let one = T::one();
    let mut pw = vec![one; n + 1];
    let mut qw = vec![one; n + 1];
    for k in 1..=n {
        pw[k] = pw[k - 1] * p;
        qw[k] = qw[k - 1] * (one - p);
    }
    let outcomes = 1usize << n;
    let seeds = est.seeds();
    let mut total = T::zero();
    for &u in &seeds {
        let chunks: Vec<T> = (0..outcomes.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut history = [0u8; MAX_ENUM_STEPS];
                let mut acc = T::zero();
                for mask in c * CHUNK..((c + 1) * CHUNK).min(outcomes) {
                    for (i, w) in history.iter_mut().take(n).enumerate() {
                        *w = ((mask >> i) & 1) as u8;
                    }
                    let ones = mask.count_ones() as usize;
                    let a = est.estimate(u, &history[..n])?;
                    acc = acc + (a - p).abs().powf(alpha) * pw[ones] * qw[n - ones];
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        total = total + chunks.into_iter().fold(T::zero(), |a, b| a + b);
    }
    Ok(total / count(seeds.len()))
}

/// Binomial probabilities `P(K = k)` for `K ~ Bin(n, p)`, built outward from
/// the mode by ratio recurrences and normalized; entries below `1e-300`
/// relative to the mode are left at zero.
fn binomial_pmf<T: Scalar>(p: T, n: usize) -> Vec<T> {
    let mut pmf = vec![T::zero(); n + 1];
    let one = T::one();
    if p <= T::zero() {
        pmf[0] = one;
        return pmf;
    }
    if p >= one {
        pmf[n] = one;
        return pmf;
    }
    let odds = p / (one - p);
    let mode = (to_f64(p) * (n + 1) as f64).floor().min(n as f64) as usize;
    let tiny = lit::<T>(1e-300).max(T::min_positive_value());
    pmf[mode] = one;
    for k in mode..n {
        let next = pmf[k] * count::<T>(n - k) / count::<T>(k + 1) * odds;
        if next < tiny {
            break;
        }
        pmf[k + 1] = next;
    }
    for k in (1..=mode).rev() {
        let prev = pmf[k] * count::<T>(k) / (count::<T>(n - k + 1) * odds);
        if prev < tiny {
            break;
        }
        pmf[k - 1] = prev;
    }
    let total = pmf.iter().fold(T::zero(), |a, &b| a + b);
    pmf.iter_mut().for_each(|v| *v = *v / total);
    pmf
}

/// `E_p |A_n - p|^alpha` for an exchangeable estimator as a sum over the
/// binomial count of ones. Valid for any `n`.
pub fn binomial_expected_error<T: Scalar>(est: &EstimatorSpec<T>, p: T, n: usize, alpha: T) -> Result<T> {
    check_p(p)?;
    check_alpha(to_f64(alpha))?;
    if !est.is_exchangeable() {
        return Err(Error::Capability("binomial evaluation of a custom estimator"));
    }
    Ok(binomial_pmf(p, n)
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > T::zero())
        .fold(T::zero(), |acc, (k, &w)| {
            acc + (est.estimate_from_count(k, n) - p).abs().powf(alpha) * w
        }))
}

/// Exact error by the cheapest exact route: binomial sum when possible,
/// enumeration otherwise.
pub fn expected_error<T: Scalar>(est: &EstimatorSpec<T>, p: T, n: usize, alpha: T) -> Result<T> {
    if est.is_exchangeable() {
        binomial_expected_error(est, p, n, alpha)
    } else {
        exact_expected_error(est, p, n, alpha)
    }
}

/// `V_m(alpha) = sum_{n=1}^m n^(-alpha/2)`.
pub fn v_m<T: Scalar>(m: usize, alpha: T) -> T {
    normalizers(m, alpha).last().copied().unwrap_or_else(T::zero)
}

/// `V_1(alpha), ..., V_m(alpha)`.
pub fn normalizers<T: Scalar>(m: usize, alpha: T) -> Vec<T> {
    let half = alpha / lit(2.0);
    let mut acc = T::zero();
    (1..=m)
        .map(|n| {
            acc = acc + count::<T>(n).powf(-half);
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretSeries<T> {
    pub p: T,
    pub alpha: T,
    /// `E_p |A_n - p|^alpha` for `n = 1..=m`.
    pub per_step: Vec<T>,
    /// Monte-Carlo standard errors of `per_step`; `None` when exact.
    pub standard_errors: Option<Vec<T>>,
    pub cumulative: Vec<T>,
    /// `V_n(alpha)` for `n = 1..=m`.
    pub normalizers: Vec<T>,
}

impl<T: Scalar> RegretSeries<T> {
    pub fn horizon(&self) -> usize {
        self.per_step.len()
    }

    /// `cumulative[n] / V_n(alpha)`.
    pub fn normalized(&self) -> Vec<T> {
        self.cumulative.iter().zip(&self.normalizers).map(|(&c, &v)| c / v).collect()
    }
}

/// Per-step errors for `n = 1..=m` and the derived cumulative regret.
///
/// Exact mode accepts any `m` for exchangeable estimators and `m <= 22`
/// otherwise. Monte-Carlo mode draws `samples` independent histories of
/// length `m`; each path fixes one seed `u`.
pub fn regret_series<T: Scalar>(est: &EstimatorSpec<T>, p: T, m: usize, alpha: T, mode: ErrorMode) -> Result<RegretSeries<T>> {
    check_p(p)?;
    check_alpha(to_f64(alpha))?;
    let (per_step, standard_errors) = match mode {
        ErrorMode::Exact => {
            if !est.is_exchangeable() && m > MAX_ENUM_STEPS {
                return Err(Error::TooLarge(m));
            }
            let v = (1..=m).map(|n| expected_error(est, p, n, alpha)).collect::<Result<Vec<_>>>()?;
            (v, None)
        }
        ErrorMode::MonteCarlo { samples, seed } => {
            let (mean, se) = monte_carlo_errors(est, p, m, alpha, samples, seed)?;
            (mean, Some(se))
        }
    };
    let mut acc = T::zero();
    let cumulative = per_step
        .iter()
        .map(|&e| {
            acc = acc + e;
            acc
        })
        .collect();
    Ok(RegretSeries {
        p,
        alpha,
        per_step,
        standard_errors,
        cumulative,
        normalizers: normalizers(m, alpha),
    })
}

fn monte_carlo_errors<T: Scalar>(est: &EstimatorSpec<T>, p: T, m: usize, alpha: T, samples: usize, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if samples < 2 {
        return Err(Error::OutOfRange {
            name: "samples",
            value: samples as f64,
            range: "[2, inf)",
        });
    }
    let pf = to_f64(p);
    let blocks: Vec<(Vec<f64>, Vec<f64>)> = (0..samples.div_ceil(MC_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(derive_seed(seed, &[b as u64]));
            let mut sum = vec![0.0; m];
            let mut sum_sq = vec![0.0; m];
            let mut history = Vec::with_capacity(m);
            for _ in b * MC_BLOCK..((b + 1) * MC_BLOCK).min(samples) {
                let u = lit::<T>(if est.randomized { rng.random::<f64>() } else { 0.0 });
                history.clear();
                for n in 0..m {
                    history.push(u8::from(rng.random::<f64>() < pf));
                    let err = to_f64((est.estimate(u, &history)? - p).abs().powf(alpha));
                    sum[n] += err;
                    sum_sq[n] += err * err;
                }
            }
            Ok((sum, sum_sq))
        })
        .collect::<Result<_>>()?;
    let mut sum = vec![0.0; m];
    let mut sum_sq = vec![0.0; m];
    for (s, s2) in blocks {
        for n in 0..m {
            sum[n] += s[n];
            sum_sq[n] += s2[n];
        }
    }
    let k = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / k).collect();
    let se = sum_sq
        .iter()
        .zip(&mean)
        .map(|(s2, mu)| lit(((s2 / k - mu * mu).max(0.0) * k / (k - 1.0) / k).sqrt()))
        .collect();
    Ok((mean.into_iter().map(lit).collect(), se))
}

/// `c = sqrt(8/3)`.
pub fn c_const<T: Scalar>() -> T {
    (lit::<T>(8.0) / lit(3.0)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundConstants<T> {
    /// `1 / (c^alpha 2^(3 + 2 alpha))`, relative to the normalizer `V_m(alpha)`.
    pub threshold: T,
    /// `3 / 2^10`, present when `alpha = 2`; relative to `log(m + 1)`.
    pub alpha2_threshold: Option<T>,
    /// `1 / (2^4 sqrt(8/3))`, present when `alpha = 1`; relative to
    /// `(m + 1)^(1/2) - 1`, i.e. `threshold / (1 - alpha/2)`.
    pub alpha1_threshold: Option<T>,
}

/// Lower-bound constants on the normalized regret limsup.
pub fn theorem2_constants<T: Scalar>(alpha: T) -> Result<LowerBoundConstants<T>> {
    let a = to_f64(alpha);
    check_alpha(a)?;
    let threshold = T::one() / (c_const::<T>().powf(alpha) * lit::<T>(2.0).powf(lit::<T>(3.0) + lit::<T>(2.0) * alpha));
    Ok(LowerBoundConstants {
        threshold,
        alpha2_threshold: (a == 2.0).then(|| lit::<T>(3.0) / lit(1024.0)),
        alpha1_threshold: (a == 1.0).then(|| T::one() / (lit::<T>(16.0) * c_const::<T>())),
    })
}

/// `eps[n] = 1 / (2 c sqrt(n))`.
pub fn epsilon_n<T: Scalar>(n: usize) -> T {
    T::one() / (lit::<T>(2.0) * c_const::<T>() * count::<T>(n).sqrt())
}

/// `eps[n]^alpha / 2^(1 + alpha)`.
pub fn truncation_cap<T: Scalar>(n: usize, alpha: T) -> T {
    epsilon_n::<T>(n).powf(alpha) / lit::<T>(2.0).powf(T::one() + alpha)
}

/// `f_n(p) = min(E_p |A_n - p|^alpha, eps[n]^alpha / 2^(1 + alpha))`.
pub fn truncated_error<T: Scalar>(est: &EstimatorSpec<T>, p: T, n: usize, alpha: T) -> Result<T> {
    Ok(expected_error(est, p, n, alpha)?.min(truncation_cap(n, alpha)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointCheck<T> {
    /// `E_p |A_n - p|^alpha + E_q |A_n - q|^alpha`.
    pub lhs: T,
    /// `|p - q|^alpha / 2^(1 + alpha)`.
    pub rhs: T,
    /// Whether `|p - q| <= eps[n]`, the separation under which the bound is claimed.
    pub applicable: bool,
    pub holds: bool,
}

/// Two-point lower bound on the summed errors of one estimator sequence run
/// under `p` and under `q`.
pub fn two_point_bound_check<T: Scalar>(est: &EstimatorSpec<T>, p: T, q: T, n: usize, alpha: T) -> Result<TwoPointCheck<T>> {
    check_range("p", to_f64(p), 0.25, 0.75, "[1/4, 3/4]")?;
    check_range("q", to_f64(q), 0.25, 0.75, "[1/4, 3/4]")?;
    let lhs = expected_error(est, p, n, alpha)? + expected_error(est, q, n, alpha)?;
    let rhs = (p - q).abs().powf(alpha) / lit::<T>(2.0).powf(T::one() + alpha);
    // A hair of slack so that |p - q| = eps[n] computed in floating point counts.
    let applicable = (p - q).abs() <= epsilon_n::<T>(n) * (T::one() + T::epsilon() * lit(8.0));
    let holds = !applicable || lhs >= rhs - lit(1e-12);
    Ok(TwoPointCheck { lhs, rhs, applicable, holds })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureProxyReport<T> {
    /// Horizon at which the limsup is evaluated.
    pub horizon: usize,
    pub alpha: T,
    pub threshold: T,
    /// `(p, (1/V_m) sum_{n<=m} E_p |A_n - p|^alpha)` in sampling order.
    pub samples: Vec<(T, T)>,
    /// Fraction of samples at or above `threshold`; `None` for no samples.
    pub fraction: Option<f64>,
}

/// Normalized regret at horizon `m`, a finite-horizon stand-in for the limsup.
pub fn normalized_regret<T: Scalar>(est: &EstimatorSpec<T>, p: T, m: usize, alpha: T, mc: ErrorMode) -> Result<T> {
    let mode = if est.is_exchangeable() || m <= MAX_ENUM_STEPS { ErrorMode::Exact } else { mc };
    let series = regret_series(est, p, m, alpha, mode)?;
    Ok(series.normalized().last().copied().unwrap_or_else(T::zero))
}

/// Samples `k` values of `p` uniformly on `[1/4, 3/4]` and reports the
/// fraction whose normalized regret at horizon `m` reaches the lower-bound
/// constant. Custom estimators beyond `m = 22` fall back to `mc`.
pub fn measure_proxy_experiment<T: Scalar>(
    est: &EstimatorSpec<T>,
    k: usize,
    m: usize,
    alpha: T,
    seed: u64,
    mc: ErrorMode,
) -> Result<MeasureProxyReport<T>> {
    let threshold = theorem2_constants(alpha)?.threshold;
    if m == 0 {
        return Err(Error::OutOfRange {
            name: "m",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    let mut rng = stream(derive_seed(seed, &[u64::MAX]));
    let ps: Vec<T> = (0..k).map(|_| lit(rng.random_range(0.25..=0.75))).collect();
    let samples = ps
        .into_par_iter()
        .map(|p| Ok((p, normalized_regret(est, p, m, alpha, mc)?)))
        .collect::<Result<Vec<_>>>()?;
    let hits = samples.iter().filter(|s| s.1 >= threshold).count();
    Ok(MeasureProxyReport {
        horizon: m,
        alpha,
        threshold,
        fraction: (k > 0).then(|| hits as f64 / k as f64),
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralCheck<T> {
    /// `2 int_{1/4}^{3/4} sum_{n<=m} f_n(p) dp`.
    pub lhs: T,
    /// `V_m(alpha) / (c^alpha 2^(2+2alpha)) - V_m(alpha+1) / (c^(alpha+1) 2^(2+2alpha))`.
    pub rhs: T,
    pub holds: bool,
}

/// Midpoint-rule check of the integrated truncated-error inequality.
pub fn truncated_integral_check<T: Scalar>(est: &EstimatorSpec<T>, m: usize, alpha: T, grid: usize) -> Result<IntegralCheck<T>> {
    check_alpha(to_f64(alpha))?;
    if grid == 0 {
        return Err(Error::OutOfRange {
            name: "grid",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    let width = lit::<T>(0.5) / count(grid);
    let cells = (0..grid)
        .into_par_iter()
        .map(|i| {
            let p = lit::<T>(0.25) + (count::<T>(i) + lit(0.5)) * width;
            (1..=m).try_fold(T::zero(), |acc, n| Ok(acc + truncated_error(est, p, n, alpha)?))
        })
        .collect::<Result<Vec<T>>>()?;
    let lhs = lit::<T>(2.0) * width * cells.into_iter().fold(T::zero(), |a, b| a + b);
    let c = c_const::<T>();
    let scale = lit::<T>(2.0).powf(lit::<T>(2.0) + lit::<T>(2.0) * alpha);
    let rhs = v_m(m, alpha) / (c.powf(alpha) * scale) - v_m(m, alpha + T::one()) / (c.powf(alpha + T::one()) * scale);
    Ok(IntegralCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - lit(1e-12),
    })
}

/// `1/4 + (1/4) ln m`, an upper bound on the empirical mean's squared-error
/// regret at horizon `m`.
pub fn regret_upper_alpha2<T: Scalar>(m: usize) -> T {
    lit::<T>(0.25) + lit::<T>(0.25) * count::<T>(m).ln()
}

/// `(1/2)^alpha / (1 - alpha/2) (m^(1 - alpha/2) - alpha/2)` for `alpha < 2`.
pub fn regret_upper_alpha_lt2<T: Scalar>(m: usize, alpha: T) -> Result<T> {
    let a = to_f64(alpha);
    if !(a > 0.0 && a < 2.0) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: a,
            range: "(0, 2)",
        });
    }
    let half = alpha / lit(2.0);
    Ok(lit::<T>(0.5).powf(alpha) / (T::one() - half) * (count::<T>(m).powf(T::one() - half) - half))
}

/// Jensen bound `(p(1-p)/n)^(alpha/2)` on the empirical mean's step error.
pub fn jensen_step_bound<T: Scalar>(p: T, n: usize, alpha: T) -> T {
    (p * (T::one() - p) / count(n)).powf(alpha / lit(2.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantGap<T> {
    pub alpha: T,
    /// `2^-alpha`: the empirical mean's normalized regret never exceeds it.
    pub upper_constant: T,
    /// The lower-bound constant `1 / (c^alpha 2^(3+2alpha))`.
    pub lower_constant: T,
    /// `upper_constant / lower_constant = c^alpha 2^(3+alpha)`.
    pub ratio: T,
    /// Horizon of the empirical proxy.
    pub horizon: usize,
    /// Largest normalized regret of the empirical mean over a `p` grid at
    /// `horizon`, divided by the lower constant.
    pub proxy_ratio: T,
}

/// Gap between the empirical mean's achievable normalized regret and the
/// lower-bound constant.
///
/// The achievable constant is the analytic `2^-alpha` from the Jensen step
/// bound at `p = 1/2`. `proxy_ratio` replaces it with the measured maximum
/// over `p` in `[1/4, 3/4]` (step `1/100`) at horizon `m`; for `alpha = 2`
/// the two agree, for `alpha < 2` the Jensen bound is loose and the proxy is
/// smaller.
pub fn constant_gap<T: Scalar>(alpha: T, m: usize) -> Result<ConstantGap<T>> {
    let lower = theorem2_constants(alpha)?.threshold;
    let upper = lit::<T>(2.0).powf(-alpha);
    let est = EstimatorSpec::<T>::empirical_mean();
    let proxy = (0..=50)
        .into_par_iter()
        .map(|i| normalized_regret(&est, lit::<T>(0.25 + 0.01 * i as f64), m, alpha, ErrorMode::Exact))
        .collect::<Result<Vec<T>>>()?
        .into_iter()
        .fold(T::zero(), T::max);
    Ok(ConstantGap {
        alpha,
        upper_constant: upper,
        lower_constant: lower,
        ratio: upper / lower,
        horizon: m,
        proxy_ratio: proxy / lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn binom(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn empirical_mean_mse() {
        let est = EstimatorSpec::<f64>::empirical_mean();
        for p in [0.25, 0.5, 0.7] {
            for n in 1..=16 {
                let e = exact_expected_error(&est, p, n, 2.0).unwrap();
                assert!((e - p * (1.0 - p) / n as f64).abs() < 1e-12, "p={p} n={n}");
            }
        }
        assert!((exact_expected_error(&est, 0.5, 4, 2.0).unwrap() - 0.0625).abs() < 1e-15);
        assert!((exact_expected_error(&est, 0.5, 1, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_error_ignores_data() {
        let est = EstimatorSpec::constant(0.3).unwrap();
        for n in [1, 5, 12] {
            let e = exact_expected_error(&est, 0.6, n, 1.5).unwrap();
            assert!((e - 0.3f64.powf(1.5)).abs() < 1e-12);
        }
        assert!(EstimatorSpec::constant(1.5).is_err());
    }

    #[test]
    fn enumeration_guard() {
        let est = EstimatorSpec::<f64>::empirical_mean();
        assert_eq!(exact_expected_error(&est, 0.5, 23, 2.0), Err(Error::TooLarge(23)));
        assert!(exact_expected_error(&est, 0.5, 3, 2.5).is_err());
        assert!(exact_expected_error(&est, 0.5, 3, 0.0).is_err());
    }

    #[test]
    fn binomial_route_matches_enumeration() {
        let est = EstimatorSpec::<f64>::empirical_mean();
        for p in [0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            for alpha in [0.5, 1.0, 1.5, 2.0] {
                for n in [1, 2, 7, 15] {
                    let a = exact_expected_error(&est, p, n, alpha).unwrap();
                    let b = binomial_expected_error(&est, p, n, alpha).unwrap();
                    assert!((a - b).abs() < 1e-13, "p={p} alpha={alpha} n={n}");
                }
            }
        }
    }

    #[test]
    fn binomial_pmf_against_direct_formula() {
        for (p, n) in [(0.3f64, 10u64), (0.5, 40), (0.71, 25)] {
            let pmf = binomial_pmf(p, n as usize);
            for k in 0..=n {
                let direct = binom(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
                assert!((pmf[k as usize] - direct).abs() < 1e-14);
            }
        }
        // Large n: mean and variance of the count.
        let n = 100_000;
        let pmf = binomial_pmf(0.3, n);
        let mean: f64 = pmf.iter().enumerate().map(|(k, w)| k as f64 * w).sum();
        let var: f64 = pmf.iter().enumerate().map(|(k, w)| (k as f64 - mean).powi(2) * w).sum();
        assert!((mean - 30_000.0).abs() < 1e-6);
        assert!((var - 21_000.0).abs() < 1e-4);
    }

    #[test]
    fn custom_estimators() {
        // Laplace's rule of succession.
        let laplace = EstimatorSpec::<f64>::custom(|_, w| {
            (w.iter().filter(|&&x| x == 1).count() as f64 + 1.0) / (w.len() as f64 + 2.0)
        });
        let n = 6;
        let p = 0.4f64;
        let direct: f64 = (0..=n as u64)
            .map(|k| binom(n as u64, k) * p.powi(k as i32) * (1.0 - p).powi(n as i32 - k as i32) * ((k as f64 + 1.0) / 8.0 - p).powi(2))
            .sum();
        assert!((exact_expected_error(&laplace, p, n, 2.0).unwrap() - direct).abs() < 1e-14);
        assert!(binomial_expected_error(&laplace, p, n, 2.0).is_err());

        let bad = EstimatorSpec::<f64>::custom(|_, _| 1.5);
        assert!(exact_expected_error(&bad, 0.5, 3, 2.0).is_err());

        // A randomized estimator returning its seed: error averages |u - p|^2.
        let seeded = EstimatorSpec::<f64>::randomized(|u, _| u, 9, 16);
        let us = seeded.seeds();
        assert_eq!(us.len(), 16);
        let want = us.iter().map(|u| (u - 0.5).powi(2)).sum::<f64>() / 16.0;
        assert!((exact_expected_error(&seeded, 0.5, 4, 2.0).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn parse_estimators() {
        assert!(matches!("empirical-mean".parse::<EstimatorSpec<f64>>().unwrap().kind, EstimatorKind::EmpiricalMean));
        let c: EstimatorSpec<f64> = "constant:0.25".parse().unwrap();
        assert_eq!(c.to_string(), "constant:0.25");
        assert!("constant:2".parse::<EstimatorSpec<f64>>().is_err());
        assert!("median".parse::<EstimatorSpec<f64>>().is_err());
    }

    #[test]
    fn regret_series_examples() {
        let est = EstimatorSpec::<f64>::empirical_mean();
        let s = regret_series(&est, 0.3, 50, 2.0, ErrorMode::Exact).unwrap();
        let mut h = 0.0;
        for n in 1..=50 {
            h += 1.0 / n as f64;
            assert!((s.cumulative[n - 1] - 0.21 * h).abs() < 1e-12);
            assert!((s.normalizers[n - 1] - h).abs() < 1e-12);
        }
        assert!(s.standard_errors.is_none());
        assert!((v_m(3, 2.0f64) - 11.0 / 6.0).abs() < 1e-15);
        let laplace = EstimatorSpec::<f64>::custom(|_, w| (w.iter().map(|&x| x as f64).sum::<f64>() + 1.0) / (w.len() as f64 + 2.0));
        assert_eq!(regret_series(&laplace, 0.3, 23, 2.0, ErrorMode::Exact), Err(Error::TooLarge(23)));
    }

    #[test]
    fn monte_carlo_agrees_with_enumeration() {
        let est = EstimatorSpec::<f64>::custom(|_, w| (w.iter().map(|&x| x as f64).sum::<f64>() + 1.0) / (w.len() as f64 + 2.0));
        let mc = regret_series(&est, 0.35, 12, 1.0, ErrorMode::MonteCarlo { samples: 200_000, seed: 5 }).unwrap();
        let ex = regret_series(&est, 0.35, 12, 1.0, ErrorMode::Exact).unwrap();
        let se = mc.standard_errors.as_ref().unwrap();
        for n in 0..12 {
            assert!((mc.per_step[n] - ex.per_step[n]).abs() <= 4.0 * se[n], "n={}", n + 1);
        }
        let again = regret_series(&est, 0.35, 12, 1.0, ErrorMode::MonteCarlo { samples: 200_000, seed: 5 }).unwrap();
        assert_eq!(mc, again);
    }

    #[test]
    fn normalizer_integral_bound() {
        for alpha in [0.5, 1.0, 1.5, 2.0] {
            let v = normalizers::<f64>(1000, alpha);
            for m in [1usize, 2, 10, 1000] {
                let integral = if alpha == 2.0 {
                    ((m + 1) as f64).ln()
                } else {
                    (((m + 1) as f64).powf(1.0 - alpha / 2.0) - 1.0) / (1.0 - alpha / 2.0)
                };
                assert!(v[m - 1] >= integral);
            }
        }
    }

    #[test]
    fn lower_bound_constants() {
        let t2 = theorem2_constants(2.0f64).unwrap();
        assert!((t2.threshold - 3.0 / 1024.0).abs() < 1e-15);
        assert_eq!(t2.alpha2_threshold, Some(3.0 / 1024.0));
        assert!(t2.alpha1_threshold.is_none());
        let t1 = theorem2_constants(1.0f64).unwrap();
        let c = (8.0f64 / 3.0).sqrt();
        assert!((t1.threshold - 1.0 / (32.0 * c)).abs() < 1e-15);
        let a1 = t1.alpha1_threshold.unwrap();
        assert!((a1 - 1.0 / (16.0 * c)).abs() < 1e-15);
        assert!((a1 - 0.038273).abs() < 1e-6);
        // Same constant after trading V_m(1) for its integral bound 2((m+1)^(1/2) - 1).
        assert!((a1 - t1.threshold / (1.0 - 0.5)).abs() < 1e-15);
        assert!(theorem2_constants(2.5).is_err());
        assert!(theorem2_constants(0.0).is_err());
        let t32 = theorem2_constants(2.0f32).unwrap();
        assert!((t32.threshold - 3.0 / 1024.0).abs() < 1e-8);
    }

    #[test]
    fn truncation_examples() {
        assert!((epsilon_n::<f64>(1) - 0.306186).abs() < 1e-6);
        assert!((truncation_cap::<f64>(1, 2.0) - 3.0 / 256.0).abs() < 1e-15);
        let est = EstimatorSpec::<f64>::empirical_mean();
        assert!((truncated_error(&est, 0.5, 1, 2.0).unwrap() - 3.0 / 256.0).abs() < 1e-15);
        let exact = EstimatorSpec::constant(0.4).unwrap();
        assert_eq!(truncated_error(&exact, 0.4, 3, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn two_point_examples() {
        let est = EstimatorSpec::<f64>::empirical_mean();
        let c = (8.0f64 / 3.0).sqrt();
        let q = 0.25 + 1.0 / (2.0 * c);
        let chk = two_point_bound_check(&est, 0.25, q, 1, 2.0).unwrap();
        assert!(chk.applicable && chk.holds);
        assert!((chk.rhs - 3.0 / 256.0).abs() < 1e-15);
        assert!((chk.lhs - (0.1875 + q * (1.0 - q))).abs() < 1e-14);
        assert!((chk.lhs - 0.434343).abs() < 1e-6);

        let same = two_point_bound_check(&est, 0.4, 0.4, 5, 1.0).unwrap();
        assert_eq!(same.rhs, 0.0);
        assert!(same.holds);

        let n = 4;
        let d = 1.0 / (2.0 * c * (n as f64).sqrt());
        let (p, q) = (0.4, 0.4 + d);
        for alpha in [1.0, 2.0] {
            let mid = EstimatorSpec::constant((p + q) / 2.0).unwrap();
            let chk = two_point_bound_check(&mid, p, q, n, alpha).unwrap();
            assert!(chk.applicable && chk.holds);
            assert!((chk.lhs - d.powf(alpha) / 2f64.powf(alpha - 1.0)).abs() < 1e-14);
        }
        let far = two_point_bound_check(&est, 0.25, 0.75, 4, 2.0).unwrap();
        assert!(!far.applicable && far.holds);
        assert!(two_point_bound_check(&est, 0.1, 0.5, 4, 2.0).is_err());
    }

    #[test]
    fn measure_proxy_examples() {
        let est = EstimatorSpec::<f64>::empirical_mean();
        let r = measure_proxy_experiment(&est, 50, 22, 2.0, 1, ErrorMode::Exact).unwrap();
        assert_eq!(r.fraction, Some(1.0));
        for &(p, v) in &r.samples {
            assert!((v - p * (1.0 - p)).abs() < 1e-12);
        }
        let c = EstimatorSpec::constant(0.5).unwrap();
        let r = measure_proxy_experiment(&c, 40, 200, 2.0, 2, ErrorMode::Exact).unwrap();
        for &(p, v) in &r.samples {
            let want = (p - 0.5f64).powi(2) * 200.0 / v_m(200, 2.0);
            assert!((v - want).abs() < 1e-12);
        }
        let empty = measure_proxy_experiment(&est, 0, 10, 2.0, 1, ErrorMode::Exact).unwrap();
        assert!(empty.samples.is_empty() && empty.fraction.is_none());
    }

    #[test]
    fn integral_inequality() {
        let est = EstimatorSpec::<f64>::empirical_mean();
        for alpha in [1.0, 2.0] {
            let chk = truncated_integral_check(&est, 22, alpha, 256).unwrap();
            assert!(chk.holds, "{chk:?}");
        }
        // Every step is capped for alpha = 2, so the integral is exact.
        let chk = truncated_integral_check(&est, 10, 2.0, 64).unwrap();
        let h10: f64 = (1..=10).map(|n| 1.0 / n as f64).sum();
        assert!((chk.lhs - 3.0 / 256.0 * h10).abs() < 1e-14);
    }

    #[test]
    fn appendix_c_bounds() {
        for m in [1usize, 10, 1000, 1_000_000] {
            let h: f64 = (1..=m).map(|n| 1.0 / n as f64).sum();
            for p in [0.05, 0.25, 0.5, 0.8] {
                assert!(p * (1.0 - p) * h <= regret_upper_alpha2::<f64>(m) + 1e-12);
            }
        }
        let est = EstimatorSpec::<f64>::empirical_mean();
        for alpha in [0.5, 1.0, 1.5] {
            let s = regret_series(&est, 0.5, 2000, alpha, ErrorMode::Exact).unwrap();
            for (i, (&e, &c)) in s.per_step.iter().zip(&s.cumulative).enumerate() {
                assert!(e <= jensen_step_bound(0.5, i + 1, alpha) + 1e-12);
                assert!(c <= regret_upper_alpha_lt2(i + 1, alpha).unwrap() + 1e-12);
            }
        }
        assert!(regret_upper_alpha_lt2::<f64>(10, 2.0).is_err());
    }

    #[test]
    fn constant_gaps() {
        let g2 = constant_gap(2.0f64, 22).unwrap();
        assert!((g2.ratio - 256.0 / 3.0).abs() < 1e-10);
        assert!((g2.proxy_ratio - 256.0 / 3.0).abs() < 1e-9);
        let g1 = constant_gap(1.0f64, 200).unwrap();
        assert!((g1.ratio - 32.0 * (2.0f64 / 3.0).sqrt()).abs() < 1e-10);
        assert!(g1.proxy_ratio < g1.ratio);
    }

    proptest! {
        #[test]
        fn errors_are_probabilities(p in 0.0f64..=1.0, n in 1usize..12, alpha in 0.1f64..=2.0) {
            let e = exact_expected_error(&EstimatorSpec::empirical_mean(), p, n, alpha).unwrap();
            prop_assert!((0.0..=1.0).contains(&e));
        }

        #[test]
        fn f32_tracks_f64(p in 0.0f64..=1.0, n in 1usize..10) {
            let a = exact_expected_error(&EstimatorSpec::<f64>::empirical_mean(), p, n, 2.0).unwrap();
            let b = exact_expected_error(&EstimatorSpec::<f32>::empirical_mean(), p as f32, n, 2.0).unwrap();
            prop_assert!((a - b as f64).abs() < 1e-6);
        }
    }
}

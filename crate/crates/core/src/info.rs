//! KL divergence and total variation between product Bernoulli measures.
//!
//! All divergences are in nats.

use rayon::prelude::*;

use crate::error::{check_range, Error, Result};
use crate::estimation::{c_const, MAX_ENUM_STEPS};
use crate::scalar::{count, lit, to_f64, Scalar};

const CHUNK: usize = 1 << 12;

/// The product of `n` Bernoulli(`p`) laws on `{0,1}^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductBernoulli<T> {
    pub p: T,
    pub n: usize,
}

impl<T: Scalar> ProductBernoulli<T> {
    pub fn new(p: T, n: usize) -> Result<Self> {
        check_range("p", to_f64(p), 0.0, 1.0, "[0, 1]")?;
        Ok(Self { p, n })
    }

    /// Probability of a history with `ones` ones.
    pub fn prob(&self, ones: usize) -> T {
        self.p.powi(ones as i32) * (T::one() - self.p).powi((self.n - ones) as i32)
    }

    /// Sum of all `2^n` outcome probabilities.
    pub fn total_mass(&self) -> Result<T> {
        enumerate(self.n, |ones| self.prob(ones))
    }
}

/// Sums `f(ones(mask))` over every mask in `{0,1}^n`, in a fixed order.
fn enumerate<T: Scalar, F: Fn(usize) -> T + Sync>(n: usize, f: F) -> Result<T> {
    if n > MAX_ENUM_STEPS {
        return Err(Error::TooLarge(n));
    }
    let outcomes = 1usize << n;
    let parts: Vec<T> = (0..outcomes.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            (c * CHUNK..((c + 1) * CHUNK).min(outcomes)).fold(T::zero(), |acc, mask| acc + f(mask.count_ones() as usize))
        })
        .collect();
    Ok(parts.into_iter().fold(T::zero(), |a, b| a + b))
}

/// `x ln(x / y)` with `0 ln(0 / y) = 0` and `x ln(x / 0) = inf` for `x > 0`.
fn xlogx_over<T: Scalar>(x: T, y: T) -> T {
    if x == T::zero() {
        T::zero()
    } else if y == T::zero() {
        T::infinity()
    } else {
        x * (x / y).ln()
    }
}

/// Per-coordinate divergence `p ln(p/q) + (1-p) ln((1-p)/(1-q))`.
pub fn kl_bernoulli<T: Scalar>(p: T, q: T) -> Result<T> {
    check_range("p", to_f64(p), 0.0, 1.0, "[0, 1]")?;
    check_range("q", to_f64(q), 0.0, 1.0, "[0, 1]")?;
    let one = T::one();
    Ok(xlogx_over(p, q) + xlogx_over(one - p, one - q))
}

/// `D(B_n^p || B_n^q) = n (p ln(p/q) + (1-p) ln((1-p)/(1-q)))`; `inf` when
/// `B_n^p` is not absolutely continuous with respect to `B_n^q`.
pub fn kl_product<T: Scalar>(p: T, q: T, n: usize) -> Result<T> {
    let d = kl_bernoulli(p, q)?;
    Ok(if n == 0 { T::zero() } else { count::<T>(n) * d })
}

/// Total variation as half the L1 distance over all `2^n` outcomes.
pub fn tv_exact<T: Scalar>(p: T, q: T, n: usize) -> Result<T> {
    let a = ProductBernoulli::new(p, n)?;
    let b = ProductBernoulli::new(q, n)?;
    Ok(enumerate(n, |ones| (a.prob(ones) - b.prob(ones)).abs())? / lit(2.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck<T> {
    pub tv: T,
    pub bound: T,
    pub holds: bool,
}

/// `tv <= c |p - q| sqrt(n)` with `c = sqrt(8/3)`, for `p, q` in `[1/4, 3/4]`.
pub fn lemma6_bound_check<T: Scalar>(p: T, q: T, n: usize) -> Result<BoundCheck<T>> {
    check_range("p", to_f64(p), 0.25, 0.75, "[1/4, 3/4]")?;
    check_range("q", to_f64(q), 0.25, 0.75, "[1/4, 3/4]")?;
    let tv = tv_exact(p, q, n)?;
    let bound = c_const::<T>() * (p - q).abs() * count::<T>(n).sqrt();
    Ok(BoundCheck {
        tv,
        bound,
        holds: tv <= bound + lit(1e-12),
    })
}

/// `tv <= min(sqrt(D(P||Q) / 2), sqrt(D(Q||P) / 2))`.
pub fn pinsker_check<T: Scalar>(p: T, q: T, n: usize) -> Result<BoundCheck<T>> {
    let tv = tv_exact(p, q, n)?;
    let half = lit::<T>(0.5);
    let bound = (half * kl_product(p, q, n)?).sqrt().min((half * kl_product(q, p, n)?).sqrt());
    Ok(BoundCheck {
        tv,
        bound,
        holds: tv <= bound + lit(1e-12),
    })
}

/// Per-coordinate divergence against `16 (p - q)^2 / 3`, valid on `[1/4, 3/4]`.
pub fn kl_quadratic_check<T: Scalar>(p: T, q: T) -> Result<BoundCheck<T>> {
    check_range("p", to_f64(p), 0.25, 0.75, "[1/4, 3/4]")?;
    check_range("q", to_f64(q), 0.25, 0.75, "[1/4, 3/4]")?;
    let d = kl_bernoulli(p, q)?;
    let bound = lit::<T>(16.0) * (p - q) * (p - q) / lit(3.0);
    Ok(BoundCheck {
        tv: d,
        bound,
        holds: d <= bound + lit(1e-12),
    })
}

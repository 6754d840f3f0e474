use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::RatePoint;
use crate::error::{Error, Result};
use crate::scalar::{count, lit, to_f64, Scalar};

type Eval<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// One coordinate of a separable utility: value, first and second derivative.
#[derive(Clone)]
pub struct Component<T> {
    value: Eval<T>,
    d1: Eval<T>,
    d2: Eval<T>,
}

impl<T: Scalar> Component<T> {
    pub fn new(
        value: impl Fn(T) -> T + Send + Sync + 'static,
        d1: impl Fn(T) -> T + Send + Sync + 'static,
        d2: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
        }
    }

    /// `log(1 + c x)`.
    pub fn scaled_log(c: T) -> Self {
        Self::new(
            move |x: T| (c * x).ln_1p(),
            move |x: T| c / (T::one() + c * x),
            move |x: T| {
                let d = T::one() + c * x;
                -(c * c) / (d * d)
            },
        )
    }

    pub fn value(&self, x: T) -> T {
        (self.value)(x)
    }

    pub fn d1(&self, x: T) -> T {
        (self.d1)(x)
    }

    pub fn d2(&self, x: T) -> T {
        (self.d2)(x)
    }
}

/// `phi(x1, x2) = phi1(x1) + phi2(x2)` with user supplied evaluators.
#[derive(Clone)]
pub struct SeparableUtility<T> {
    pub first: Component<T>,
    pub second: Component<T>,
}

/// Concave utility of the time-averaged rate vector.
#[derive(Clone)]
pub enum UtilityFunction<T> {
    /// `log(1 + x1) + log(1 + x2)`.
    Log1p,
    /// `log(1 + c x1) + log(1 + c x2)`, `c > 0`.
    ScaledLog { c: T },
    Separable(SeparableUtility<T>),
    /// `a1 x1 + a2 x2`.
    Linear { a1: T, a2: T },
    /// `min(x1, x2)`.
    Min,
}

impl<T: fmt::Display> fmt::Debug for UtilityFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Log1p => write!(f, "Log1p"),
            Self::ScaledLog { c } => write!(f, "ScaledLog {{ c: {c} }}"),
            Self::Separable(_) => write!(f, "Separable(..)"),
            Self::Linear { a1, a2 } => write!(f, "Linear {{ a1: {a1}, a2: {a2} }}"),
            Self::Min => write!(f, "Min"),
        }
    }
}

impl<T: fmt::Display> fmt::Display for UtilityFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Log1p => write!(f, "log1p"),
            Self::ScaledLog { c } => write!(f, "scaled-log:{c}"),
            Self::Separable(_) => write!(f, "separable-custom"),
            Self::Linear { a1, a2 } => write!(f, "linear:{a1},{a2}"),
            Self::Min => write!(f, "min"),
        }
    }
}

impl<T: Scalar> FromStr for UtilityFunction<T> {
    type Err = Error;

    /// Accepts `log1p`, `scaled-log:<c>`, `linear:<a1>,<a2>` and `min`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            what: "utility",
            input: s.to_string(),
        };
        let num = |t: &str| t.trim().parse::<f64>().map(lit::<T>).map_err(|_| bad());
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a)),
            None => (s.trim(), None),
        };
        match (head, arg) {
            ("log1p", None) => Ok(Self::Log1p),
            ("min", None) => Ok(Self::Min),
            ("scaled-log", Some(a)) => Self::scaled_log(num(a)?),
            ("linear", Some(a)) => {
                let (a1, a2) = a.split_once(',').ok_or_else(bad)?;
                Ok(Self::Linear { a1: num(a1)?, a2: num(a2)? })
            }
            _ => Err(bad()),
        }
    }
}

impl<T: Scalar> UtilityFunction<T> {
    pub fn scaled_log(c: T) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::OutOfRange {
                name: "c",
                value: to_f64(c),
                range: "(0, inf)",
            });
        }
        Ok(Self::ScaledLog { c })
    }

    pub fn separable(first: Component<T>, second: Component<T>) -> Self {
        Self::Separable(SeparableUtility { first, second })
    }

    /// The log1p utility expressed through the generic separable path.
    pub fn log1p_as_separable() -> Self {
        Self::separable(Component::scaled_log(T::one()), Component::scaled_log(T::one()))
    }

    pub fn value(&self, p: &RatePoint<T>) -> T {
        match self {
            Self::Log1p => p.x1.ln_1p() + p.x2.ln_1p(),
            Self::ScaledLog { c } => (*c * p.x1).ln_1p() + (*c * p.x2).ln_1p(),
            Self::Separable(s) => s.first.value(p.x1) + s.second.value(p.x2),
            Self::Linear { a1, a2 } => *a1 * p.x1 + *a2 * p.x2,
            Self::Min => p.x1.min(p.x2),
        }
    }

    /// Whether the gradient is defined everywhere on the unit square.
    pub fn is_differentiable(&self) -> bool {
        !matches!(self, Self::Min)
    }

    /// Whether the utility is a sum of per-coordinate functions with
    /// second derivatives available.
    pub fn is_separable(&self) -> bool {
        !matches!(self, Self::Min)
    }

    /// First derivative of the `i`-th coordinate function (`i` is 1 or 2).
    pub fn d1(&self, i: usize, x: T) -> Result<T> {
        Ok(match self {
            Self::Log1p => T::one() / (T::one() + x),
            Self::ScaledLog { c } => *c / (T::one() + *c * x),
            Self::Separable(s) => s.component(i).d1(x),
            Self::Linear { a1, a2 } => {
                if i == 1 {
                    *a1
                } else {
                    *a2
                }
            }
            Self::Min => return Err(Error::Capability("derivative")),
        })
    }

    /// Second derivative of the `i`-th coordinate function.
    pub fn d2(&self, i: usize, x: T) -> Result<T> {
        Ok(match self {
            Self::Log1p => {
                let d = T::one() + x;
                -T::one() / (d * d)
            }
            Self::ScaledLog { c } => {
                let d = T::one() + *c * x;
                -(*c * *c) / (d * d)
            }
            Self::Separable(s) => s.component(i).d2(x),
            Self::Linear { .. } => T::zero(),
            Self::Min => return Err(Error::Capability("second derivative")),
        })
    }

    pub fn gradient(&self, p: &RatePoint<T>) -> Result<RatePoint<T>> {
        Ok(RatePoint::new_unchecked(self.d1(1, p.x1)?, self.d1(2, p.x2)?))
    }

    /// Checks positivity of first derivatives, negativity of second
    /// derivatives on a `1e-3` grid of `[0, 1]`, and `phi1'(1) < 2 phi2'(0)`.
    pub fn check_root_condition(&self) -> Result<()> {
        if !self.is_separable() {
            return Err(Error::Assumption(format!("{self} is not separable and differentiable")));
        }
        let steps = 1000;
        for i in 1..=2 {
            for k in 0..=steps {
                let x: T = count::<T>(k) / count::<T>(steps);
                let d1 = self.d1(i, x)?;
                if !(d1 > T::zero()) {
                    return Err(Error::Assumption(format!("phi{i}'({x}) = {d1} is not positive")));
                }
                let d2 = self.d2(i, x)?;
                if !(d2 < T::zero()) {
                    return Err(Error::Assumption(format!("phi{i}''({x}) = {d2} is not negative")));
                }
            }
        }
        let lhs = self.d1(1, T::one())?;
        let rhs = lit::<T>(2.0) * self.d1(2, T::zero())?;
        if !(lhs < rhs) {
            return Err(Error::Assumption(format!("phi1'(1) = {lhs} is not below 2 phi2'(0) = {rhs}")));
        }
        Ok(())
    }
}

impl<T: Scalar> SeparableUtility<T> {
    fn component(&self, i: usize) -> &Component<T> {
        if i == 1 {
            &self.first
        } else {
            &self.second
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x1: f64, x2: f64) -> RatePoint<f64> {
        RatePoint::new_unchecked(x1, x2)
    }

    #[test]
    fn value_examples() {
        let u = UtilityFunction::<f64>::Log1p;
        assert_eq!(u.value(&pt(0.0, 0.0)), 0.0);
        assert!((u.value(&pt(1.0, 1.0)) - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!((u.value(&pt(1.0, 1.0)) - 1.386294).abs() < 1e-6);
        let lin = UtilityFunction::Linear { a1: 1.0, a2: 1.0 };
        assert!((lin.value(&pt(0.3, 0.4)) - 0.7).abs() < 1e-15);
        assert_eq!(UtilityFunction::<f64>::Min.value(&pt(0.3, 0.4)), 0.3);
    }

    #[test]
    fn capabilities() {
        assert!(UtilityFunction::<f64>::Min.gradient(&pt(0.2, 0.2)).is_err());
        assert!(UtilityFunction::<f64>::Log1p.check_root_condition().is_ok());
        assert!(UtilityFunction::<f64>::scaled_log(3.0).unwrap().check_root_condition().is_ok());
        assert!(UtilityFunction::<f64>::log1p_as_separable().check_root_condition().is_ok());
        assert!(matches!(
            UtilityFunction::Linear { a1: 1.0, a2: 1.0 }.check_root_condition(),
            Err(Error::Assumption(_))
        ));
        assert!(UtilityFunction::<f64>::Min.check_root_condition().is_err());
        assert!(UtilityFunction::<f64>::scaled_log(0.0).is_err());
    }

    #[test]
    fn assumption3_violation_detected() {
        // phi1 = 3 log(1+x) has phi1'(1) = 1.5 < 2 phi2'(0) = 2 for phi2 = log(1+x),
        // but phi1 = 5 log(1+x) has phi1'(1) = 2.5 > 2.
        let strong = Component::new(|x: f64| 5.0 * x.ln_1p(), |x| 5.0 / (1.0 + x), |x| -5.0 / ((1.0 + x) * (1.0 + x)));
        let u = UtilityFunction::separable(strong, Component::scaled_log(1.0));
        assert!(u.check_root_condition().is_err());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["log1p", "min", "scaled-log:2", "linear:1,0.5"] {
            let u: UtilityFunction<f64> = s.parse().unwrap();
            let again: UtilityFunction<f64> = u.to_string().parse().unwrap();
            assert_eq!(u.to_string(), again.to_string());
        }
        assert!("cubic".parse::<UtilityFunction<f64>>().is_err());
        assert!("linear:1".parse::<UtilityFunction<f64>>().is_err());
    }

    proptest! {
        #[test]
        fn log1p_monotone(a in 0.0..1.0f64, b in 0.0..1.0f64, da in 0.0..1.0f64, db in 0.0..1.0f64) {
            let u = UtilityFunction::<f64>::Log1p;
            let lo = pt(a, b);
            let hi = pt((a + da).min(1.0), (b + db).min(1.0));
            prop_assert!(u.value(&lo) <= u.value(&hi));
        }

        #[test]
        fn log1p_strongly_concave(
            x1 in 0.0..=1.0f64, x2 in 0.0..=1.0f64,
            y1 in 0.0..=1.0f64, y2 in 0.0..=1.0f64,
            lam in 0.0..=1.0f64,
        ) {
            let u = UtilityFunction::<f64>::Log1p;
            let (x, y) = (pt(x1, x2), pt(y1, y2));
            let mix = y.lerp(&x, lam);
            let rhs = lam * u.value(&x) + (1.0 - lam) * u.value(&y)
                + 0.125 * lam * (1.0 - lam) * (x - y).norm_sq();
            prop_assert!(u.value(&mix) >= rhs - 1e-9);
        }

        #[test]
        fn separable_log_matches_closed_form(x1 in 0.0..=1.0f64, x2 in 0.0..=1.0f64) {
            let a = UtilityFunction::<f64>::Log1p;
            let b = UtilityFunction::<f64>::log1p_as_separable();
            let p = pt(x1, x2);
            prop_assert!((a.value(&p) - b.value(&p)).abs() < 1e-15);
            for i in 1..=2 {
                prop_assert!((a.d1(i, x1).unwrap() - b.d1(i, x1).unwrap()).abs() < 1e-15);
                prop_assert!((a.d2(i, x1).unwrap() - b.d2(i, x1).unwrap()).abs() < 1e-15);
            }
        }
    }
}

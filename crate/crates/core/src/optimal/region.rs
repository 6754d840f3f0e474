use crate::error::{check_range, Result};
use crate::scalar::{clamp, golden_max, lit, to_f64, Scalar};
use crate::system::{forced_decision, RatePoint, UtilityFunction};

/// The set of one-shot expected rate vectors for channel probability `q`.
///
/// For `q = 0` the region is the single point `(1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSpec<T> {
    q: T,
}

/// `lambda * boundary(r_a) + (1 - lambda) * boundary(r_b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mixture<T> {
    pub r_a: T,
    pub r_b: T,
    pub lambda: T,
}

impl<T: Scalar> RegionSpec<T> {
    pub fn new(q: T) -> Result<Self> {
        check_range("q", to_f64(q), 0.0, 1.0, "[0, 1]")?;
        Ok(Self { q })
    }

    pub fn q(&self) -> T {
        self.q
    }

    /// Expected rate of the stationary policy that plays `r` whenever `S = 1`:
    /// `(1 - q + q r, q (1 - r^2))`.
    pub fn boundary(&self, r: T) -> RatePoint<T> {
        let q = self.q;
        RatePoint::new_unchecked(T::one() - q + q * r, q * (T::one() - r * r))
    }

    /// Upper boundary height `2(1 - x1) - (1 - x1)^2 / q`.
    pub fn upper(&self, x1: T) -> T {
        let d = T::one() - x1;
        lit::<T>(2.0) * d - d * d / self.q
    }

    pub fn contains(&self, p: &RatePoint<T>, tol: T) -> bool {
        if self.q == T::zero() {
            return (p.x1 - T::one()).abs() <= tol && p.x2.abs() <= tol;
        }
        p.x1 >= T::one() - self.q - tol
            && p.x1 <= T::one() + tol
            && p.x1 + p.x2 >= T::one() - tol
            && p.x2 <= self.upper(p.x1) + tol
    }

    /// Writes a region point as a mixture of two boundary points.
    ///
    /// The two curve points lie on the line `x1 + x2 = p.x1 + p.x2`, which is
    /// parallel to the lower boundary chord from `boundary(0)` to
    /// `boundary(1)`, so for interior points the mixture reproduces `p`
    /// exactly. Points within tolerance of the region are moved onto it
    /// first, and the returned mixture dominates them.
    pub fn decompose(&self, p: &RatePoint<T>) -> Option<Mixture<T>> {
        let tol = lit::<T>(1e-9);
        if !self.contains(p, tol) {
            return None;
        }
        let (zero, one, two) = (T::zero(), T::one(), lit::<T>(2.0));
        if self.q == zero {
            return Some(Mixture { r_a: one, r_b: one, lambda: one });
        }
        let q = self.q;
        // r - r^2 = (s - 1)/q has the two roots r_a <= 1/2 <= r_b.
        let level = clamp((p.x1 + p.x2 - one) / q, zero, lit(0.25));
        let root = (one - lit::<T>(4.0) * level).max(zero).sqrt();
        let r_a = clamp((one - root) / two, zero, one);
        let r_b = clamp((one + root) / two, zero, one);
        let r_p = clamp((p.x1 - one + q) / q, r_a, r_b);
        let width = r_b - r_a;
        let snap = lit::<T>(1e-12);
        let lambda = if width <= snap { one } else { clamp((r_b - r_p) / width, zero, one) };
        Some(if lambda <= snap {
            Mixture { r_a: r_b, r_b, lambda: one }
        } else if lambda >= one - snap {
            Mixture { r_a, r_b: r_a, lambda: one }
        } else {
            Mixture { r_a, r_b, lambda }
        })
    }

    pub fn mixture_point(&self, m: &Mixture<T>) -> RatePoint<T> {
        self.boundary(m.r_b).lerp(&self.boundary(m.r_a), m.lambda)
    }
}

pub fn region_contains<T: Scalar>(spec: &RegionSpec<T>, p: &RatePoint<T>, tol: T) -> bool {
    spec.contains(p, tol)
}

pub fn region_decompose<T: Scalar>(spec: &RegionSpec<T>, p: &RatePoint<T>) -> Option<Mixture<T>> {
    spec.decompose(p)
}

/// Maximizes any catalog utility over the region by golden-section search
/// along the upper boundary. Returns the maximizing `r` and the point.
///
/// Every catalog utility is nondecreasing and concave, so the maximum lies
/// on the upper boundary and the composite is unimodal in `r`.
pub fn region_optimum<T: Scalar>(spec: &RegionSpec<T>, u: &UtilityFunction<T>) -> (T, RatePoint<T>) {
    if spec.q == T::zero() {
        return (T::one(), forced_decision());
    }
    let r = golden_max(|r| u.value(&spec.boundary(r)), T::zero(), T::one(), T::root_tol());
    (r, spec.boundary(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x1: f64, x2: f64) -> RatePoint<f64> {
        RatePoint::new_unchecked(x1, x2)
    }

    #[test]
    fn containment_examples() {
        let half = RegionSpec::new(0.5_f64).unwrap();
        assert!(half.contains(&pt(1.0, 0.0), 0.0));
        assert!(half.contains(&pt(0.75, 0.375), 1e-12));
        assert!(!half.contains(&pt(0.4, 0.5), 1e-9));
        assert!(!half.contains(&pt(0.9, 0.05), 1e-9));
        assert!(!half.contains(&pt(0.75, 0.38), 1e-9));
    }

    #[test]
    fn zero_probability_is_a_point() {
        let z = RegionSpec::new(0.0).unwrap();
        assert!(z.contains(&pt(1.0, 0.0), 0.0));
        assert!(!z.contains(&pt(0.9, 0.1), 1e-9));
        assert_eq!(z.decompose(&pt(1.0, 0.0)).unwrap().lambda, 1.0);
        assert_eq!(region_optimum(&z, &UtilityFunction::Log1p).1, pt(1.0, 0.0));
    }

    #[test]
    fn decomposition_examples() {
        let half = RegionSpec::new(0.5_f64).unwrap();
        for r in [0.1, 0.5, 0.8] {
            let b = half.boundary(r);
            let m = half.decompose(&b).unwrap();
            assert_eq!(m.lambda, 1.0);
            assert!((m.r_a - (b.x1 - 1.0 + 0.5) / 0.5).abs() < 1e-9, "r = {r}");
        }
        for q in [0.2, 0.5, 1.0] {
            let spec = RegionSpec::new(q).unwrap();
            let m = spec.decompose(&pt(1.0, 0.0)).unwrap();
            assert_eq!((m.r_a, m.lambda), (1.0, 1.0));
        }
        let p = pt(0.75, 0.3);
        let m = half.decompose(&p).unwrap();
        assert!(half.mixture_point(&m).dominates(&p, 1e-9));
        assert!(half.decompose(&pt(0.4, 0.5)).is_none());
    }

    #[test]
    fn linear_optimum_matches_support_function() {
        // max of a1 x1 + a2 x2 along the boundary is at r = a1 / (2 a2).
        let spec = RegionSpec::new(0.4_f64).unwrap();
        let (r, _) = region_optimum(&spec, &UtilityFunction::Linear { a1: 0.6, a2: 1.0 });
        assert!((r - 0.3).abs() < 1e-6);
        let (r, _) = region_optimum(&spec, &UtilityFunction::Linear { a1: 3.0, a2: 1.0 });
        assert!((r - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn boundary_mixtures_are_contained(q in 0.01..=1.0f64, ra in 0.0..=1.0f64, rb in 0.0..=1.0f64, lam in 0.0..=1.0f64) {
            let spec = RegionSpec::new(q).unwrap();
            let p = spec.mixture_point(&Mixture { r_a: ra, r_b: rb, lambda: lam });
            prop_assert!(spec.contains(&p, 1e-9));
        }

        #[test]
        fn decomposition_reproduces_interior_points(q in 0.01..=1.0f64, u in 0.0..=1.0f64, v in 0.0..=1.0f64) {
            let spec = RegionSpec::new(q).unwrap();
            let x1 = 1.0 - q + q * u;
            let lo = 1.0 - x1;
            let x2 = lo + v * (spec.upper(x1) - lo);
            let p = pt(x1, x2);
            let m = spec.decompose(&p).unwrap();
            let back = spec.mixture_point(&m);
            prop_assert!((back.x1 - p.x1).abs() < 1e-9 && (back.x2 - p.x2).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&m.lambda));
        }
    }
}

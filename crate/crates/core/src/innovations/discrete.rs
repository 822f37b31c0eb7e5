use rand::Rng;

use super::InnovationSpec;
use crate::error::{Error, Result};
use crate::rng::open01;
use crate::scalar::Real;

/// Upper-tail mass left out when a series over `k` is truncated.
pub const TAIL_MASS: f64 = 1e-12;

/// Longest series ever summed term by term.
pub(crate) const SCAN_CAP: u64 = 20_000_000;

/// The count law `P_σ` of `⌊σY⌋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizedLaw<T> {
    sigma: T,
    base: InnovationSpec<T>,
}

/// Total variation distance together with a bound on its numerical error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvDistance<T> {
    pub distance: T,
    pub error: T,
}

/// Saturating conversion of a non-negative real to a count.
#[inline]
pub(crate) fn to_count<T: Real>(v: T) -> u64 {
    if !(v > T::zero()) {
        0
    } else {
        v.floor().to_u64().unwrap_or(u64::MAX)
    }
}

/// Smallest `k ∈ [0, cap]` with `pred(k)` true for a predicate that is false
/// and then true; returns `cap` when the switch lies beyond it. Gallops out
/// from `guess`, then bisects.
pub(crate) fn smallest_true(mut pred: impl FnMut(u64) -> bool, guess: u64, cap: u64) -> u64 {
    let guess = guess.min(cap);
    let mut lo: Option<u64>;
    let mut hi: u64;
    let mut step = 1u64;
    if pred(guess) {
        hi = guess;
        lo = None;
        while hi > 0 {
            let cand = hi.saturating_sub(step);
            if pred(cand) {
                hi = cand;
                step = step.saturating_mul(2);
            } else {
                lo = Some(cand);
                break;
            }
        }
    } else {
        lo = Some(guess);
        loop {
            let cand = guess.saturating_add(step).min(cap);
            if cand == cap || pred(cand) {
                hi = cand;
                break;
            }
            lo = Some(cand);
            step = step.saturating_mul(2);
        }
    }
    let Some(mut lo) = lo else { return hi };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

impl<T: Real> DiscretizedLaw<T> {
    pub fn new(base: InnovationSpec<T>, sigma: T) -> Result<Self> {
        if !(sigma.is_finite() && sigma > T::zero()) {
            return Err(Error::domain(format!("scale sigma must be > 0, got {sigma}")));
        }
        Ok(DiscretizedLaw { sigma, base })
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn base(&self) -> &InnovationSpec<T> {
        &self.base
    }

    /// `P(σY ∈ [k, k+1))`.
    pub fn pmf(&self, k: u64) -> T {
        let lo = T::of_u64(k) / self.sigma;
        let hi = T::of_u64(k.saturating_add(1)) / self.sigma;
        let v = if self.base.cdf(lo) < T::lit(0.5) {
            self.base.cdf(hi) - self.base.cdf(lo)
        } else {
            self.base.sf(lo) - self.base.sf(hi)
        };
        v.max(T::zero())
    }

    /// `P(X ≤ k)`.
    pub fn cdf(&self, k: u64) -> T {
        self.base.cdf(T::of_u64(k.saturating_add(1)) / self.sigma)
    }

    /// `P(X > k)`.
    pub fn sf(&self, k: u64) -> T {
        self.base.sf(T::of_u64(k.saturating_add(1)) / self.sigma)
    }

    /// `P(X < k)`.
    pub fn cdf_below(&self, k: u64) -> T {
        self.base.cdf(T::of_u64(k) / self.sigma)
    }

    /// `P(X ≥ k)`.
    pub fn sf_from(&self, k: u64) -> T {
        self.base.sf(T::of_u64(k) / self.sigma)
    }

    /// `K = ⌈σ · F⁻¹(1 − 10⁻¹²)⌉`; the mass above `K` is below `10⁻¹²`.
    pub fn truncation(&self) -> u64 {
        let q = self.sigma * self.base.tail_quantile();
        to_count(q.ceil())
    }

    /// Smallest `k` with `P(X ≤ k) > v`.
    pub fn first_exceeding(&self, v: T) -> u64 {
        let guess = to_count(self.sigma * self.base.quantile(v.max(T::zero())));
        smallest_true(|k| self.cdf(k) > v, guess, u64::MAX)
    }

    /// Draws `(Y, ⌊σY⌋)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (T, u64) {
        let y = self.base.quantile(open01(rng));
        (y, to_count(self.sigma * y))
    }

    fn same_base(&self, other: &Self) -> Result<()> {
        if self.base == other.base {
            Ok(())
        } else {
            Err(Error::usage(format!(
                "total variation between different innovation laws ({:?} vs {:?})",
                self.base, other.base
            )))
        }
    }

    /// Orders two laws of the same family by scale.
    pub(crate) fn by_scale<'a>(a: &'a Self, b: &'a Self) -> (&'a Self, &'a Self) {
        if a.sigma <= b.sigma {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// For laws with monotone likelihood ratio: the smallest `k` at which the
    /// larger-scale pmf catches up with the smaller-scale one.
    pub(crate) fn crossing(lo: &Self, hi: &Self) -> u64 {
        let cap = lo.truncation().max(hi.truncation()).max(1);
        let guess = to_count((lo.sigma * hi.sigma).sqrt() * lo.base.median());
        smallest_true(|k| hi.pmf(k) >= lo.pmf(k), guess, cap)
    }

    /// `d_TV(P_σ, P_σ')`.
    pub fn tv_distance(&self, other: &Self) -> Result<T> {
        Ok(self.tv_detailed(other)?.distance)
    }

    /// `d_TV` with a numerical error bound.
    ///
    /// Families with monotone likelihood ratio in the scale have a single
    /// crossing `k*` of the two pmfs, so the distance is a difference of two
    /// CDF values. Other laws are summed term by term up to the truncation
    /// point, and the tail mass is reported as error.
    pub fn tv_detailed(&self, other: &Self) -> Result<TvDistance<T>> {
        self.same_base(other)?;
        if self.sigma == other.sigma {
            return Ok(TvDistance { distance: T::zero(), error: T::zero() });
        }
        if self.base.scale_mlr() {
            let (lo, hi) = Self::by_scale(self, other);
            let k = Self::crossing(lo, hi);
            let d = if k == 0 {
                T::zero()
            } else if lo.cdf_below(k) > T::lit(0.5) {
                hi.sf_from(k) - lo.sf_from(k)
            } else {
                lo.cdf_below(k) - hi.cdf_below(k)
            };
            let eps = T::epsilon() * T::lit(16.0);
            return Ok(TvDistance {
                distance: d.max(T::zero()).min(T::one()),
                error: eps,
            });
        }
        self.tv_scan(other)
    }

    /// `d_TV` by direct summation of `|pmf₁(k) − pmf₂(k)| / 2`.
    pub fn tv_scan(&self, other: &Self) -> Result<TvDistance<T>> {
        self.same_base(other)?;
        let k_max = self.truncation().max(other.truncation()).min(SCAN_CAP);
        let mut sum = T::zero();
        let mut comp = T::zero();
        for k in 0..=k_max {
            // Kahan summation
            let term = (self.pmf(k) - other.pmf(k)).abs() - comp;
            let next = sum + term;
            comp = (next - sum) - term;
            sum = next;
        }
        let (s1, s2) = (self.sf(k_max), other.sf(k_max));
        let distance = (sum + (s1 - s2).abs()) / T::lit(2.0);
        Ok(TvDistance {
            distance: distance.min(T::one()),
            error: (s1 + s2) / T::lit(2.0) + T::epsilon() * T::of_u64(k_max + 1),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn geometric(sigma: f64, k: u64) -> f64 {
        let p = 1.0 - (-1.0 / sigma).exp();
        (1.0 - p).powi(k as i32) * p
    }

    #[test]
    fn exponential_pmf_is_geometric() {
        let base = InnovationSpec::exponential(1.0);
        for &sigma in &[0.1, 1.0, 10.0, 100.0] {
            let law = DiscretizedLaw::new(base, sigma).unwrap();
            for k in 0..=200 {
                assert_abs_diff_eq!(law.pmf(k), geometric(sigma, k), epsilon = 1e-12);
            }
        }
        let law = DiscretizedLaw::new(base, 1.0).unwrap();
        assert_abs_diff_eq!(law.pmf(0), 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn half_normal_pmf_matches_quadrature() {
        let base = InnovationSpec::half_normal(1.0);
        let law = DiscretizedLaw::new(base, 2.0).unwrap();
        let oracle =
            crate::quadrature::integrate(|x| base.density(x), 1.5, 2.0, 1e-13).unwrap();
        assert_abs_diff_eq!(law.pmf(3), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(law.pmf(3), 0.088_114_14, epsilon = 1e-7);
    }

    #[test]
    fn pmf_sums_to_one_after_truncation() {
        let bases = [
            InnovationSpec::exponential(1.0),
            InnovationSpec::half_normal(1.0),
            InnovationSpec::chi_square(3.0),
        ];
        for base in bases {
            for &sigma in &[0.3, 1.0, 7.5, 40.0] {
                let law = DiscretizedLaw::new(base, sigma).unwrap();
                let total: f64 = (0..=law.truncation()).map(|k| law.pmf(k)).sum();
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn non_positive_scale_is_domain_error() {
        let base = InnovationSpec::exponential(1.0);
        assert!(matches!(DiscretizedLaw::new(base, 0.0), Err(Error::Domain(_))));
        assert!(matches!(DiscretizedLaw::new(base, -2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn first_exceeding_inverts_cdf() {
        let law = DiscretizedLaw::new(InnovationSpec::half_normal(1.0), 13.0).unwrap();
        for i in 0..100 {
            let v = i as f64 / 100.0 + 0.003;
            let k = law.first_exceeding(v);
            assert!(law.cdf(k) > v);
            assert!(k == 0 || law.cdf(k - 1) <= v);
        }
    }

    #[test]
    fn smallest_true_edges() {
        assert_eq!(smallest_true(|_| true, 10, 100), 0);
        assert_eq!(smallest_true(|k| k >= 37, 0, 100), 37);
        assert_eq!(smallest_true(|k| k >= 37, 90, 100), 37);
        assert_eq!(smallest_true(|k| k >= 500, 3, 100), 100);
    }

    #[test]
    fn tv_identical_laws_is_zero() {
        let base = InnovationSpec::exponential(1.0);
        let a = DiscretizedLaw::new(base, 5.0).unwrap();
        assert_eq!(a.tv_distance(&a).unwrap(), 0.0);
    }

    #[test]
    fn tv_geometric_direct_summation() {
        let base = InnovationSpec::exponential(1.0);
        let a = DiscretizedLaw::new(base, 2.0).unwrap();
        let b = DiscretizedLaw::new(base, 2.2).unwrap();
        let oracle: f64 =
            0.5 * (0..5_000).map(|k| (geometric(2.0, k) - geometric(2.2, k)).abs()).sum::<f64>();
        assert_abs_diff_eq!(a.tv_distance(&b).unwrap(), oracle, epsilon = 1e-13);
        assert_abs_diff_eq!(a.tv_scan(&b).unwrap().distance, oracle, epsilon = 1e-12);
    }

    #[test]
    fn tv_exponential_log_scale_bound() {
        let base = InnovationSpec::exponential(1.0);
        let a = DiscretizedLaw::new(base, 1.0).unwrap();
        let b = DiscretizedLaw::new(base, std::f64::consts::E).unwrap();
        assert!(a.tv_distance(&b).unwrap() <= 1.0);
    }

    #[test]
    fn tv_mismatched_bases_is_usage_error() {
        let a = DiscretizedLaw::new(InnovationSpec::exponential(1.0), 1.0).unwrap();
        let b = DiscretizedLaw::new(InnovationSpec::half_normal(1.0), 1.0).unwrap();
        assert!(matches!(a.tv_distance(&b), Err(Error::Usage(_))));
    }

    #[test]
    fn bimodal_half_cauchy_uses_scan() {
        let base = InnovationSpec::half_cauchy(3.0, 1.0);
        let a = DiscretizedLaw::new(base, 0.5).unwrap();
        let b = DiscretizedLaw::new(base, 0.7).unwrap();
        let d = a.tv_detailed(&b).unwrap();
        assert!(d.distance > 0.0 && d.distance < 1.0);
        assert!(d.error < 1e-6);
    }

    proptest! {
        #[test]
        fn crossing_and_scan_agree(s1 in 0.2f64..60.0, ratio in 1.001f64..4.0, which in 0usize..3) {
            let base = [
                InnovationSpec::exponential(1.0),
                InnovationSpec::half_normal(1.0),
                InnovationSpec::chi_square(3.0),
            ][which];
            let a = DiscretizedLaw::new(base, s1).unwrap();
            let b = DiscretizedLaw::new(base, s1 * ratio).unwrap();
            let fast = a.tv_distance(&b).unwrap();
            let slow = a.tv_scan(&b).unwrap().distance;
            prop_assert!((fast - slow).abs() < 1e-10, "fast {} slow {}", fast, slow);
        }

        #[test]
        fn stochastic_ordering(s1 in 0.2f64..50.0, ratio in 1.0f64..5.0, k in 0u64..400) {
            for base in [InnovationSpec::exponential(1.0), InnovationSpec::half_normal(1.0), InnovationSpec::chi_square(4.0)] {
                let small = DiscretizedLaw::new(base, s1).unwrap();
                let large = DiscretizedLaw::new(base, s1 * ratio).unwrap();
                prop_assert!(large.cdf(k) <= small.cdf(k) + 1e-15);
            }
        }
    }
}

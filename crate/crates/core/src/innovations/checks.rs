//! Numeric checks of the distributional facts the mixing bound rests on.

use super::discrete::SCAN_CAP;
use super::{DiscretizedLaw, InnovationSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Violations smaller than this are attributed to rounding.
pub const TV_BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvPairCheck<T> {
    pub sigma: T,
    pub sigma_prime: T,
    pub tv: T,
    pub bound: T,
    pub slack: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvBoundReport<T> {
    pub big_gamma: T,
    pub pairs: Vec<TvPairCheck<T>>,
}

impl<T: Real> TvBoundReport<T> {
    /// All ordered pairs of a scale grid, diagonal included.
    pub fn grid_pairs(sigmas: &[T]) -> Vec<(T, T)> {
        sigmas
            .iter()
            .flat_map(|&s| sigmas.iter().map(move |&t| (s, t)))
            .collect()
    }

    pub fn max_slack(&self) -> T {
        self.pairs.iter().map(|p| p.slack).fold(T::neg_infinity(), T::max)
    }

    pub fn min_slack(&self) -> T {
        self.pairs.iter().map(|p| p.slack).fold(T::infinity(), T::min)
    }
}

/// Checks `d_TV(P_σ, P_σ') ≤ Γ |ln σ − ln σ'|` on every pair.
///
/// Returns [`Error::Property`] naming the first pair that exceeds the bound
/// by more than [`TV_BOUND_TOL`].
pub fn tv_bound_check<T: Real>(spec: &InnovationSpec<T>, pairs: &[(T, T)]) -> Result<TvBoundReport<T>> {
    check_with_constant(spec, spec.constants()?.big_gamma, pairs)
}

fn check_with_constant<T: Real>(
    spec: &InnovationSpec<T>,
    big_gamma: T,
    pairs: &[(T, T)],
) -> Result<TvBoundReport<T>> {
    let mut out = Vec::with_capacity(pairs.len());
    for &(s, t) in pairs {
        let a = DiscretizedLaw::new(*spec, s)?;
        let b = DiscretizedLaw::new(*spec, t)?;
        let tv = a.tv_distance(&b)?;
        let bound = big_gamma * (s.ln() - t.ln()).abs();
        let slack = bound - tv;
        if slack < -T::lit(TV_BOUND_TOL) {
            return Err(Error::Property(format!(
                "d_TV(P_{s}, P_{t}) = {tv} exceeds Gamma*|ln s - ln t| = {bound}"
            )));
        }
        out.push(TvPairCheck { sigma: s, sigma_prime: t, tv, bound, slack });
    }
    Ok(TvBoundReport { big_gamma, pairs: out })
}

fn scan_limit<T: Real>(law: &DiscretizedLaw<T>) -> Result<u64> {
    let k = law.truncation();
    if k > SCAN_CAP {
        Err(Error::numeric(format!(
            "series for sigma = {} needs {k} terms (cap {SCAN_CAP})",
            law.sigma()
        )))
    } else {
        Ok(k)
    }
}

/// `E ln(⌊σY⌋ + 1) = Σ_{k≥1} ln(1 + 1/k) · P(σY ≥ k)`.
pub fn expected_log_count<T: Real>(law: &DiscretizedLaw<T>) -> Result<T> {
    let k_max = scan_limit(law)?;
    Ok((1..=k_max)
        .map(|k| (T::one() / T::of_u64(k)).ln_1p() * law.sf_from(k))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct La1Report<T> {
    pub sigma: T,
    /// `E|ln(⌊σY⌋+1) − ln(σ+1)|`.
    pub lhs: T,
    /// `‖p‖∞ + E ln⁺Y`.
    pub rhs: T,
}

impl<T: Real> La1Report<T> {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// Evaluates both sides of `E|ln(⌊σY⌋+1) − ln(σ+1)| ≤ ‖p‖∞ + E ln⁺Y`.
pub fn la1_check<T: Real>(spec: &InnovationSpec<T>, sigma: T) -> Result<La1Report<T>> {
    let c = spec.constants()?;
    let law = DiscretizedLaw::new(*spec, sigma)?;
    let k_max = scan_limit(&law)?;
    let centre = sigma.ln_1p();
    let lhs = (0..=k_max)
        .map(|k| law.pmf(k) * (T::of_u64(k).ln_1p() - centre).abs())
        .sum();
    Ok(La1Report { sigma, lhs, rhs: c.p_sup + c.e_ln_plus })
}

#[derive(Debug, Clone, PartialEq)]
pub struct La2Report<T> {
    pub gamma: T,
    /// `(σ, difference quotient, γ/σ)` per grid point.
    pub points: Vec<(T, T, T)>,
}

impl<T: Real> La2Report<T> {
    /// Largest `quotient − γ/σ` over the grid.
    pub fn max_excess(&self) -> T {
        self.points
            .iter()
            .map(|&(_, q, b)| q - b)
            .fold(T::neg_infinity(), T::max)
    }
}

/// Forward difference quotients of `σ ↦ E ln(⌊σY⌋+1)` with relative step
/// `rel_step`, compared with `γ/σ`.
pub fn la2_check<T: Real>(spec: &InnovationSpec<T>, sigmas: &[T], rel_step: T) -> Result<La2Report<T>> {
    let gamma = spec.constants()?.gamma;
    let mut points = Vec::with_capacity(sigmas.len());
    for &s in sigmas {
        let h = s * rel_step;
        let m0 = expected_log_count(&DiscretizedLaw::new(*spec, s)?)?;
        let m1 = expected_log_count(&DiscretizedLaw::new(*spec, s + h)?)?;
        points.push((s, (m1 - m0) / h, gamma / s));
    }
    Ok(La2Report { gamma, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_grid_holds_with_unit_gamma() {
        let spec = InnovationSpec::exponential(1.0);
        let pairs = TvBoundReport::grid_pairs(&[0.5, 1.0, 2.0, 4.0, 8.0]);
        let r = tv_bound_check(&spec, &pairs).unwrap();
        assert_eq!(r.big_gamma, 1.0);
        assert_eq!(r.pairs.len(), 25);
        assert!(r.min_slack() >= -TV_BOUND_TOL);
        for p in r.pairs.iter().filter(|p| p.sigma == p.sigma_prime) {
            assert_eq!(p.slack, 0.0);
            assert_eq!(p.bound, 0.0);
        }
    }

    #[test]
    fn chi_square_pairs_hold_with_derived_gamma() {
        let spec = InnovationSpec::chi_square(3.0);
        let r = tv_bound_check(&spec, &[(1.0, 1.1), (2.0, 2.2)]).unwrap();
        assert!(r.big_gamma > 1.0);
        assert!(r.min_slack() >= 0.0);
    }

    #[test]
    fn violation_is_reported() {
        let spec = InnovationSpec::exponential(1.0);
        let err = check_with_constant(&spec, 0.1, &[(1.0, 3.0)]).unwrap_err();
        assert!(matches!(err, Error::Property(_)), "{err}");
    }

    #[test]
    fn la1_holds_for_built_in_families() {
        for spec in [
            InnovationSpec::exponential(1.0),
            InnovationSpec::half_normal(1.0),
            InnovationSpec::chi_square(3.0),
        ] {
            for &s in &[1.0, 10.0, 1000.0] {
                let r = la1_check(&spec, s).unwrap();
                assert!(r.holds(), "{spec:?} sigma={s}: {r:?}");
            }
        }
    }

    #[test]
    fn expected_log_count_matches_pmf_sum() {
        let law = DiscretizedLaw::new(InnovationSpec::half_normal(1.0), 17.0).unwrap();
        let direct: f64 = (0..=law.truncation())
            .map(|k| law.pmf(k) * ((k + 1) as f64).ln())
            .sum();
        let series = expected_log_count(&law).unwrap();
        assert!((direct - series).abs() < 1e-10);
    }

    #[test]
    fn la2_quotients_below_gamma_over_sigma() {
        let grid: Vec<f64> = (0..25).map(|i| 10f64.powf(-1.0 + i as f64 * 0.15)).collect();
        for spec in [InnovationSpec::exponential(1.0), InnovationSpec::chi_square(3.0)] {
            let r = la2_check(&spec, &grid, 1e-3).unwrap();
            assert!(r.max_excess() <= 1e-6, "{spec:?}: {}", r.max_excess());
        }
    }
}

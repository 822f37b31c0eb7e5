//! Descriptive statistics and goodness-of-fit helpers for Monte Carlo output.

use crate::scalar::Real;
use crate::special::{erfc, gamma_q};

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman and Fan type 7). `sorted` must be ascending and non-empty.
pub fn quantile_sorted<T: Real>(sorted: &[T], p: T) -> T {
    let h = T::of_usize(sorted.len() - 1) * p;
    let lo = h.floor().to_usize().unwrap_or(0).min(sorted.len() - 1);
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - T::of_usize(lo)) * (sorted[hi] - sorted[lo])
}

/// Sorts a copy of `values` ascending (NaN last).
pub fn sorted<T: Real>(values: &[T]) -> Vec<T> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Greater));
    v
}

/// Five-number summary with Tukey whiskers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSummary<T> {
    pub q1: T,
    pub median: T,
    pub q3: T,
    pub iqr: T,
    /// Most extreme observations within 1.5 IQR of the quartiles.
    pub whisker_low: T,
    pub whisker_high: T,
}

pub fn box_summary<T: Real>(values: &[T]) -> BoxSummary<T> {
    let s = sorted(values);
    let q1 = quantile_sorted(&s, T::lit(0.25));
    let median = quantile_sorted(&s, T::lit(0.5));
    let q3 = quantile_sorted(&s, T::lit(0.75));
    let iqr = q3 - q1;
    let fence = T::lit(1.5) * iqr;
    let whisker_low = s.iter().copied().find(|&v| v >= q1 - fence).unwrap_or(q1);
    let whisker_high = s.iter().rev().copied().find(|&v| v <= q3 + fence).unwrap_or(q3);
    BoxSummary { q1, median, q3, iqr, whisker_low, whisker_high }
}

pub fn mean<T: Real>(values: &[T]) -> T {
    values.iter().copied().sum::<T>() / T::of_usize(values.len())
}

/// Unbiased sample variance.
pub fn variance<T: Real>(values: &[T]) -> T {
    let m = mean(values);
    values.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / T::of_usize(values.len() - 1)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    let z = x / std::f64::consts::SQRT_2;
    if z >= 0.0 {
        1.0 - 0.5 * erfc(z)
    } else {
        0.5 * erfc(-z)
    }
}

/// Kolmogorov–Smirnov statistic of `values` against the continuous CDF `cdf`.
pub fn ks_statistic(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let s = sorted(values);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the KS statistic `d` for sample size `n`, with
/// Stephens' small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Upper tail `P(χ²_df > x)`.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    gamma_q(df / 2.0, x / 2.0)
}

/// Pearson goodness-of-fit of observed counts against cell probabilities.
///
/// Cells with expected count below `min_expected` are pooled from the right
/// into their neighbour, and the leftover mass `1 − Σ probs` joins the last
/// cell. Returns `(statistic, degrees of freedom, p-value)`.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> (f64, usize, f64) {
    let total: u64 = observed.iter().sum();
    let nf = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    let leftover = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    for (i, (&o, &p)) in observed.iter().zip(probs).enumerate() {
        o_acc += o as f64;
        e_acc += p * nf;
        if i + 1 == probs.len() {
            e_acc += leftover * nf;
        }
        if e_acc >= min_expected {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    let stat: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let df = cells.len().saturating_sub(1).max(1);
    (stat, df, chi_square_sf(stat, df as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantiles_match_type7() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.5), 2.5);
        assert_eq!(quantile_sorted(&s, 0.25), 1.75);
        let b = box_summary(&[4.0, 1.0, 3.0, 2.0, 100.0]);
        assert_eq!(b.median, 3.0);
        assert_eq!(b.whisker_high, 4.0);
        assert_eq!(b.whisker_low, 1.0);
    }

    #[test]
    fn normal_cdf_values() {
        assert_abs_diff_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-16);
        assert_abs_diff_eq!(normal_cdf(1.959_963_984_540_054), 0.975, epsilon = 1e-12);
        assert_abs_diff_eq!(normal_cdf(-3.0), 0.001_349_898_031_630_094_6, epsilon = 1e-15);
    }

    #[test]
    fn ks_pvalue_reference() {
        // scipy.stats.kstwobign.sf(1.36) ≈ 0.0494
        assert_abs_diff_eq!(ks_pvalue(1.36 / (1e6f64).sqrt(), 1_000_000), 0.049_4, epsilon = 2e-4);
        let u: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&u, |x| x);
        assert_abs_diff_eq!(d, 0.0005, epsilon = 1e-12);
        assert_eq!(ks_pvalue(d, 1000), 1.0);
    }

    #[test]
    fn chi_square_reference() {
        // P(χ²_3 > 7.814727903251178) = 0.05
        assert_abs_diff_eq!(chi_square_sf(7.814_727_903_251_178, 3.0), 0.05, epsilon = 1e-12);
        let (stat, df, p) = chi_square_gof(&[25, 25, 25, 25], &[0.25; 4], 5.0);
        assert_eq!((stat, df), (0.0, 3));
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        let (_, df, _) = chi_square_gof(&[50, 40, 9, 1, 0], &[0.5, 0.4, 0.09, 0.009, 0.001], 5.0);
        assert_eq!(df, 2);
    }
}

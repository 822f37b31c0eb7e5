//! Least-squares trend fit `ln(X_t + 1) ≈ θ ln t` and related quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::innovations::DistributionConstants;
use crate::mc::{self, Moments};
use crate::process::{log_count, Model, ModelParams};
use crate::rng::{derive_seed, tag};
use crate::scalar::Real;

/// Result of [`theta_hat`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrendFit<T> {
    pub theta_hat: T,
    pub n: usize,
    /// `Σ_{t=1}^n ln² t`.
    pub weights_denominator: T,
    /// `ln(X_t + 1)` for `t = 1..=n`.
    pub log_counts: Vec<T>,
}

impl<T: Real> TrendFit<T> {
    /// `√n · ln n`.
    pub fn rate(&self) -> T {
        rate(self.n)
    }

    /// The fitted curve `t^θ̂` for `t = 1..=n`.
    pub fn trend_curve(&self) -> Vec<T> {
        (1..=self.n).map(|t| T::of_usize(t).powf(self.theta_hat)).collect()
    }
}

/// `√n · ln n`.
pub fn rate<T: Real>(n: usize) -> T {
    let n = T::of_usize(n);
    n.sqrt() * n.ln()
}

/// `Σ_{t=1}^n ln² t`.
pub fn sum_log_squares<T: Real>(n: usize) -> T {
    (2..=n).map(|t| T::of_usize(t).ln().powi(2)).sum()
}

/// `θ̂ = Σ ln t · ln(X_t+1) / Σ ln² t` for counts `X_1, ..., X_n`.
pub fn theta_hat<T: Real>(x: &[u64]) -> Result<TrendFit<T>> {
    fit_log_counts(x.iter().map(|&v| log_count(v)).collect())
}

/// [`theta_hat`] for an already transformed series `ln(X_t + 1)`.
pub fn fit_log_counts<T: Real>(log_counts: Vec<T>) -> Result<TrendFit<T>> {
    let n = log_counts.len();
    if n < 2 {
        return Err(Error::usage(format!("trend fit needs n >= 2 observations, got {n}")));
    }
    let denom = sum_log_squares::<T>(n);
    let num: T = log_counts
        .iter()
        .enumerate()
        .map(|(i, &y)| T::of_usize(i + 1).ln() * y)
        .sum();
    Ok(TrendFit {
        theta_hat: num / denom,
        n,
        weights_denominator: denom,
        log_counts,
    })
}

/// Monte Carlo value of the projection target `θ̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetTheta<T> {
    pub theta_bar: T,
    pub mc_loops: usize,
    pub stderr: T,
}

/// `θ̄ = Σ ln t · E ln(X_t+1) / Σ ln² t`, with the expectation replaced by an
/// average over `mc_loops` simulated paths.
///
/// `θ̄` is linear in the path means, so it equals the average of the per-path
/// `θ̂`, and its standard error is theirs divided by `√mc_loops`.
pub fn theta_bar_mc<T: Real>(model: &Model<T>, n: usize, mc_loops: usize, seed: u64) -> Result<TargetTheta<T>> {
    if mc_loops == 0 {
        return Err(Error::usage("theta_bar needs at least one Monte Carlo loop"));
    }
    let m = mc::try_reduce(
        mc_loops,
        || Moments::new(1),
        |acc, r| {
            let path = model.simulate(n, derive_seed(seed, &[tag::THETA_BAR, r as u64]))?;
            acc.push([theta_hat::<T>(&path.x[1..])?.theta_hat]);
            Ok::<(), Error>(())
        },
        Moments::merge,
    )?;
    Ok(TargetTheta {
        theta_bar: m.mean()[0],
        mc_loops,
        stderr: m.variance()[0].sqrt() / T::of_usize(mc_loops).sqrt(),
    })
}

/// `T_n = √n ln n (θ̂ − θ_ref)`.
pub fn t_statistic<T: Real>(fit: &TrendFit<T>, theta_ref: T) -> T {
    fit.rate() * (fit.theta_hat - theta_ref)
}

/// Limiting variance of `T_n`: `Var(ln Y) (1−a)² / (1−a−b)²`.
pub fn asymptotic_sigma2<T: Real>(params: &ModelParams<T>, constants: &DistributionConstants<T>) -> T {
    let one = T::one();
    constants.var_ln_y * (one - params.a).powi(2) / (one - params.a - params.b).powi(2)
}

/// Nearest-neighbour mean of `y` at time `t` (1-based): the average of
/// `y_s` over `s ∈ {1..n}` with `|s − t| ≤ window`.
pub fn nn_mean<T: Real>(y: &[T], t: usize, window: usize) -> Result<T> {
    if t == 0 || t > y.len() {
        return Err(Error::usage(format!("time index {t} outside 1..={}", y.len())));
    }
    let lo = t.saturating_sub(window).max(1);
    let hi = (t + window).min(y.len());
    let s: T = y[lo - 1..hi].iter().copied().sum();
    Ok(s / T::of_usize(hi - lo + 1))
}

/// [`nn_mean`] at every `t = 1..=n`, in `O(n)`.
pub fn nn_means<T: Real>(y: &[T], window: usize) -> Vec<T> {
    let n = y.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(T::zero());
    for &v in y {
        let last = *prefix.last().unwrap();
        prefix.push(last + v);
    }
    (1..=n)
        .map(|t| {
            let lo = t.saturating_sub(window).max(1);
            let hi = (t + window).min(n);
            (prefix[hi] - prefix[lo - 1]) / T::of_usize(hi - lo + 1)
        })
        .collect()
}

/// Bootstrap weights `w_t = √n ln n · ln t / Σ_s ln² s`, `t = 1..=n`.
pub fn weights<T: Real>(n: usize) -> Result<Vec<T>> {
    if n < 2 {
        return Err(Error::usage(format!("weights need n >= 2, got {n}")));
    }
    let scale = rate::<T>(n) / sum_log_squares::<T>(n);
    Ok((1..=n).map(|t| scale * T::of_usize(t).ln()).collect())
}

/// Exact value and leading term of `Σ_{1 ≤ t, t+h ≤ n} ln(t+h) ln t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogSum {
    pub exact: f64,
    /// `n ln² n`.
    pub leading: f64,
    /// `exact − leading`.
    pub remainder: f64,
    /// `|remainder| / (n ln n)`.
    pub constant: f64,
}

pub fn loglog_sum_check(n: usize, h: i64) -> Result<LogLogSum> {
    if (n as i64) < h.abs() + 2 {
        return Err(Error::usage(format!("need n >= |h| + 2, got n = {n}, h = {h}")));
    }
    let first = 1.max(1 - h) as usize;
    let last = (n as i64).min(n as i64 - h) as usize;
    let mut exact = 0.0;
    let mut comp = 0.0;
    for t in first..=last {
        let term = ((t as i64 + h) as f64).ln() * (t as f64).ln() - comp;
        let next = exact + term;
        comp = (next - exact) - term;
        exact = next;
    }
    let nf = n as f64;
    let leading = nf * nf.ln().powi(2);
    let remainder = exact - leading;
    Ok(LogLogSum {
        exact,
        leading,
        remainder,
        constant: remainder.abs() / (nf * nf.ln()),
    })
}

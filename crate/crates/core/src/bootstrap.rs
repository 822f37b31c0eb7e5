//! Dependent wild bootstrap for the trend statistic.
//!
//! Given the data, the bootstrap statistic is
//! `T* = Σ_t w_t (ln(X_t+1) − m̂(t)) W*_t`, where `m̂` is the nearest-neighbour
//! mean and `W*` is a stationary Gaussian AR(1) path with
//! `Cov(W*_s, W*_t) = e^{−|s−t|/l_n}`. The `(1 − α/2)` quantile `u*` of `T*`
//! gives the interval `θ̂ ± u*/(√n ln n)`.

use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{nn_means, theta_bar_mc, theta_hat, weights, TrendFit};
use crate::mc;
use crate::process::Model;
use crate::rng::{self, derive_seed, standard_normal, tag};
use crate::scalar::Real;

/// Bootstrap replications below which results are flagged as unreliable.
pub const MIN_REPLICATIONS: usize = 200;

/// Loops used for `θ̄` when a coverage experiment has to compute it.
pub const THETA_BAR_LOOPS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig<T> {
    /// Dependence length of the multipliers.
    pub l_n: T,
    /// Nearest-neighbour half window.
    #[serde(rename = "N_n")]
    pub nn_window: usize,
    /// Bootstrap replications.
    #[serde(rename = "B")]
    pub replications: usize,
    pub alpha: T,
}

impl<T: Real> BootstrapConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_n.is_finite() && self.l_n > T::zero()) {
            return Err(Error::domain(format!("l_n must be > 0, got {}", self.l_n)));
        }
        if !(self.alpha > T::zero() && self.alpha <= T::one()) {
            return Err(Error::domain(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.replications == 0 {
            return Err(Error::domain("B must be >= 1"));
        }
        Ok(())
    }

    /// Departures from the recommended regime for sample size `n`.
    pub fn warnings(&self, n: usize) -> Vec<String> {
        let mut out = Vec::new();
        if self.l_n >= T::of_usize(self.nn_window) {
            out.push(format!("l_n = {} is not below N_n = {}", self.l_n, self.nn_window));
        }
        let nf = T::of_usize(n.max(2));
        let rate = self.l_n * T::of_usize(self.nn_window) * nf.ln().powi(2) / nf;
        if rate >= T::one() {
            out.push(format!("l_n * N_n * ln(n)^2 / n = {rate} is not below 1"));
        }
        if self.replications < MIN_REPLICATIONS {
            out.push(format!("B = {} is below {MIN_REPLICATIONS}", self.replications));
        }
        out
    }
}

/// AR(1) coefficients `(ρ, √(1 − ρ²))` with `ρ = e^{−1/l_n}`.
pub fn ar_coefficients<T: Real>(l_n: T) -> (T, T) {
    let rho = (-l_n.recip()).exp();
    let innov = (-(-T::lit(2.0) / l_n).exp_m1()).sqrt();
    (rho, innov)
}

/// Fills `out` with a stationary AR(1) multiplier path.
pub fn multipliers_into<T: Real, R: Rng + ?Sized>(out: &mut [T], l_n: T, rng: &mut R) {
    let (rho, innov) = ar_coefficients(l_n);
    let mut w = T::zero();
    for (t, slot) in out.iter_mut().enumerate() {
        let e: T = standard_normal(rng);
        w = if t == 0 { e } else { rho * w + innov * e };
        *slot = w;
    }
}

/// A fresh multiplier path `W*_1, ..., W*_n`.
pub fn multipliers<T: Real, R: Rng + ?Sized>(n: usize, l_n: T, rng: &mut R) -> Vec<T> {
    let mut out = vec![T::zero(); n];
    multipliers_into(&mut out, l_n, rng);
    out
}

/// The data side of `T*`: `v_t = w_t (ln(X_t+1) − m̂(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared<T> {
    pub l_n: T,
    pub v: Vec<T>,
}

impl<T: Real> Prepared<T> {
    pub fn new(fit: &TrendFit<T>, l_n: T, nn_window: usize) -> Result<Self> {
        let w = weights::<T>(fit.n)?;
        let m = nn_means(&fit.log_counts, nn_window);
        let v = w
            .iter()
            .zip(&fit.log_counts)
            .zip(&m)
            .map(|((&w, &y), &m)| w * (y - m))
            .collect();
        Ok(Prepared { l_n, v })
    }

    /// `Σ v_t W_t` for given multipliers.
    pub fn statistic(&self, multipliers: &[T]) -> T {
        self.v.iter().zip(multipliers).map(|(&v, &w)| v * w).sum()
    }

    /// One bootstrap draw with fresh multipliers, reusing `scratch`.
    pub fn draw<R: Rng + ?Sized>(&self, scratch: &mut Vec<T>, rng: &mut R) -> T {
        scratch.resize(self.v.len(), T::zero());
        multipliers_into(scratch, self.l_n, rng);
        self.statistic(scratch)
    }

    /// Exact conditional variance `Σ_{s,t} v_s v_t ρ^{|s−t|}`.
    pub fn exact_variance(&self) -> T {
        let (rho, _) = ar_coefficients(self.l_n);
        let mut carry = T::zero();
        let mut diag = T::zero();
        let mut cross = T::zero();
        for (t, &v) in self.v.iter().enumerate() {
            if t > 0 {
                carry = rho * (carry + self.v[t - 1]);
            }
            diag = diag + v * v;
            cross = cross + v * carry;
        }
        diag + T::lit(2.0) * cross
    }

    /// `replications` draws, sorted ascending; draw `b` uses its own stream
    /// below `seed`.
    pub fn sorted_draws(&self, replications: usize, seed: u64) -> Vec<T> {
        let mut scratch = Vec::with_capacity(self.v.len());
        let mut draws: Vec<T> = (0..replications)
            .map(|b| self.draw(&mut scratch, &mut rng::stream(seed, &[b as u64])))
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).expect("finite bootstrap draw"));
        draws
    }
}

/// One bootstrap statistic `T*` for a fitted series.
pub fn t_star<T: Real, R: Rng + ?Sized>(fit: &TrendFit<T>, cfg: &BootstrapConfig<T>, rng: &mut R) -> Result<T> {
    let p = Prepared::new(fit, cfg.l_n, cfg.nn_window)?;
    Ok(p.draw(&mut Vec::new(), rng))
}

/// Order statistic at 1-based index `⌈(1 − α/2) B⌉` of sorted draws.
pub fn upper_quantile<T: Real>(sorted: &[T], alpha: T) -> T {
    let b = sorted.len();
    let pos = (T::one() - alpha / T::lit(2.0)) * T::of_usize(b);
    // guard against 0.95 * 1000 landing a hair above 950
    let idx = (pos - T::lit(1e-9)).ceil().to_usize().unwrap_or(1).clamp(1, b);
    sorted[idx - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval<T> {
    pub theta_hat: T,
    pub lower: T,
    pub upper: T,
    /// `1 − α`.
    pub level: T,
    pub u_star: T,
    pub half_width: T,
}

impl<T: Real> ConfidenceInterval<T> {
    pub fn from_draws(fit: &TrendFit<T>, sorted: &[T], alpha: T) -> Self {
        let u_star = upper_quantile(sorted, alpha);
        let half_width = u_star / fit.rate();
        ConfidenceInterval {
            theta_hat: fit.theta_hat,
            lower: fit.theta_hat - half_width,
            upper: fit.theta_hat + half_width,
            level: T::one() - alpha,
            u_star,
            half_width,
        }
    }

    pub fn contains(&self, v: T) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Bootstrap interval for `θ̄`.
pub fn confidence_interval<T: Real>(fit: &TrendFit<T>, cfg: &BootstrapConfig<T>, seed: u64) -> Result<ConfidenceInterval<T>> {
    cfg.validate()?;
    let p = Prepared::new(fit, cfg.l_n, cfg.nn_window)?;
    let draws = p.sorted_draws(cfg.replications, derive_seed(seed, &[tag::BOOTSTRAP]));
    Ok(ConfidenceInterval::from_draws(fit, &draws, cfg.alpha))
}

/// A `(l_n, N_n)` cell of a coverage table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageCell<T> {
    pub l_n: T,
    #[serde(rename = "N_n")]
    pub nn_window: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow<T> {
    pub l_n: T,
    pub nn_window: usize,
    pub family: String,
    pub alpha: T,
    pub coverage: T,
    pub mc_loops: usize,
    pub replications: usize,
}

/// Writes `l_n,N_n,family,alpha,coverage,mc_loops,B`.
pub fn write_coverage_csv<T: Real, W: Write>(rows: &[CoverageRow<T>], mut w: W) -> io::Result<()> {
    writeln!(w, "l_n,N_n,family,alpha,coverage,mc_loops,B")?;
    for r in rows {
        writeln!(
            w,
            "{:?},{},{},{:?},{:?},{},{}",
            r.l_n, r.nn_window, r.family, r.alpha, r.coverage, r.mc_loops, r.replications
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageTable<T> {
    pub n: usize,
    pub theta_bar: T,
    pub rows: Vec<CoverageRow<T>>,
}

impl<T: Real> CoverageTable<T> {
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_coverage_csv(&self.rows, w)
    }

    pub fn coverage(&self, l_n: T, nn_window: usize, alpha: T) -> Option<T> {
        self.rows
            .iter()
            .find(|r| r.l_n == l_n && r.nn_window == nn_window && r.alpha == alpha)
            .map(|r| r.coverage)
    }
}

/// Fraction of simulated paths whose bootstrap interval covers `θ̄`, for
/// every cell and level.
///
/// Path `r` is the same in every cell. Bootstrap draws depend on the cell and
/// the path but not on `α`, so intervals of one cell are nested in `α`.
#[allow(clippy::too_many_arguments)]
pub fn coverage_experiment<T: Real>(
    model: &Model<T>,
    n: usize,
    cells: &[CoverageCell<T>],
    alphas: &[T],
    mc_loops: usize,
    replications: usize,
    theta_bar: Option<T>,
    seed: u64,
) -> Result<CoverageTable<T>> {
    for c in cells {
        for &alpha in alphas {
            BootstrapConfig { l_n: c.l_n, nn_window: c.nn_window, replications, alpha }.validate()?;
        }
    }
    let theta_bar = match theta_bar {
        Some(v) => v,
        None => theta_bar_mc(model, n, THETA_BAR_LOOPS, seed)?.theta_bar,
    };
    let width = alphas.len();
    let hits = mc::try_reduce(
        mc_loops,
        || vec![0u64; cells.len() * width],
        |acc, r| {
            let path = model.simulate(n, derive_seed(seed, &[tag::COVERAGE, r as u64]))?;
            let fit = theta_hat::<T>(&path.x[1..])?;
            for (i, c) in cells.iter().enumerate() {
                let p = Prepared::new(&fit, c.l_n, c.nn_window)?;
                let cell_seed = derive_seed(
                    seed,
                    &[tag::BOOTSTRAP, c.l_n.as_f64().to_bits(), c.nn_window as u64, r as u64],
                );
                let draws = p.sorted_draws(replications, cell_seed);
                for (j, &alpha) in alphas.iter().enumerate() {
                    if ConfidenceInterval::from_draws(&fit, &draws, alpha).contains(theta_bar) {
                        acc[i * width + j] += 1;
                    }
                }
            }
            Ok::<(), Error>(())
        },
        |a, b| a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
    )?;
    let family = model.params().innovation.family().to_string();
    let mut rows = Vec::with_capacity(hits.len());
    for (i, c) in cells.iter().enumerate() {
        for (j, &alpha) in alphas.iter().enumerate() {
            rows.push(CoverageRow {
                l_n: c.l_n,
                nn_window: c.nn_window,
                family: family.clone(),
                alpha,
                coverage: T::of_u64(hits[i * width + j]) / T::of_usize(mc_loops),
                mc_loops,
                replications,
            });
        }
    }
    Ok(CoverageTable { n, theta_bar, rows })
}

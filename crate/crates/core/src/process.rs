//! The log-linear count process.
//!
//! ```text
//! ln σ_t = a ln σ_{t-1} + b ln(X_{t-1} + 1) + C_{t-1},   X_t = ⌊σ_t Y_t⌋,   t ≥ 1,
//! ```
//!
//! started from a fixed `σ₀` and `X₀ ~ P_{σ₀}`. The exogenous term is either
//! the trend `C_{t-1} = c ln t` or that trend plus i.i.d. noise.

use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::innovations::{DistributionConstants, InnovationSpec};
use crate::mc::{self, Moments};
use crate::rng::{self, open01, standard_normal, tag, Stream};
use crate::scalar::Real;

/// Law of the noise added to the trend in [`ExogenousSpec::IidLog`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ExogenousLaw<T> {
    Normal { mean: T, sd: T },
    Uniform { low: T, high: T },
}

/// How the exogenous terms `C_{t-1}` are generated.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExogenousSpec<T> {
    /// `C_{t-1} = c ln t`.
    #[default]
    DeterministicTrend,
    /// `C_{t-1} = c ln t + Z_{t-1}` with i.i.d. `Z_t` drawn from `law`.
    IidLog { law: ExogenousLaw<T> },
}

impl<T: Real> ExogenousSpec<T> {
    /// `M = sup_t E|C_t − E C_t|`.
    pub fn m_bound(&self) -> T {
        match *self {
            ExogenousSpec::DeterministicTrend => T::zero(),
            ExogenousSpec::IidLog { law: ExogenousLaw::Normal { sd, .. } } => {
                sd * (T::lit(2.0) / T::PI()).sqrt()
            }
            ExogenousSpec::IidLog { law: ExogenousLaw::Uniform { low, high } } => {
                (high - low) / T::lit(4.0)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ExogenousSpec::DeterministicTrend => Ok(()),
            ExogenousSpec::IidLog { law: ExogenousLaw::Normal { mean, sd } } => {
                if mean.is_finite() && sd.is_finite() && sd >= T::zero() {
                    Ok(())
                } else {
                    Err(Error::domain(format!("exogenous normal needs finite mean and sd >= 0, got ({mean}, {sd})")))
                }
            }
            ExogenousSpec::IidLog { law: ExogenousLaw::Uniform { low, high } } => {
                if low.is_finite() && high.is_finite() && low <= high {
                    Ok(())
                } else {
                    Err(Error::domain(format!("exogenous uniform needs low <= high, got ({low}, {high})")))
                }
            }
        }
    }

    fn noise<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match *self {
            ExogenousSpec::DeterministicTrend => T::zero(),
            ExogenousSpec::IidLog { law: ExogenousLaw::Normal { mean, sd } } => {
                mean + sd * standard_normal::<T, R>(rng)
            }
            ExogenousSpec::IidLog { law: ExogenousLaw::Uniform { low, high } } => {
                low + (high - low) * open01::<T, R>(rng)
            }
        }
    }

    /// Whether the exogenous terms consume random numbers.
    pub fn is_random(&self) -> bool {
        !matches!(self, ExogenousSpec::DeterministicTrend)
    }
}

/// Parameters of the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub sigma0: T,
    pub innovation: InnovationSpec<T>,
    #[serde(default)]
    pub exogenous: ExogenousSpec<T>,
}

impl<T: Real> ModelParams<T> {
    /// Trend model with `σ₀ = 1`.
    pub fn trend(a: T, b: T, c: T, innovation: InnovationSpec<T>) -> Self {
        ModelParams {
            a,
            b,
            c,
            sigma0: T::one(),
            innovation,
            exogenous: ExogenousSpec::DeterministicTrend,
        }
    }

    /// Checks the parameter domain and the contraction condition `a + bγ < 1`.
    pub fn validate(&self) -> Result<DistributionConstants<T>> {
        let nonneg = |v: T| v.is_finite() && v >= T::zero();
        if !nonneg(self.a) || !nonneg(self.b) || !nonneg(self.c) {
            return Err(Error::domain(format!(
                "a, b, c must be finite and >= 0, got ({}, {}, {})",
                self.a, self.b, self.c
            )));
        }
        if !(self.sigma0.is_finite() && self.sigma0 >= T::one()) {
            return Err(Error::domain(format!("sigma0 must be >= 1, got {}", self.sigma0)));
        }
        self.exogenous.validate()?;
        let constants = self.innovation.constants()?;
        let value = self.a + self.b * constants.gamma;
        if !(value < T::one()) {
            return Err(Error::Contraction {
                a: self.a.as_f64(),
                b: self.b.as_f64(),
                gamma: constants.gamma.as_f64(),
                value: value.as_f64(),
            });
        }
        Ok(constants)
    }

    /// Trend exponent `θ = c / (1 − a − b)`.
    pub fn theta(&self) -> T {
        self.c / (T::one() - self.a - self.b)
    }
}

/// Output of a single recursion step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step<T> {
    pub sigma: T,
    pub x: u64,
    /// The exogenous term `C_{t-1}` that entered `σ_t`.
    pub c_exo: T,
    pub y: T,
}

/// A simulated path `(σ_t, X_t, Y_t)` for `t = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub sigma: Vec<T>,
    pub x: Vec<u64>,
    /// `c_exo[j] = C_j` for `j = 0..n`; there is no exogenous input at `t = 0`.
    pub c_exo: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Real> Trajectory<T> {
    /// Number of recursion steps `n`.
    pub fn n(&self) -> usize {
        self.x.len() - 1
    }

    /// `ln(X_t + 1)` for `t = 1..=n`.
    pub fn log_counts(&self) -> Vec<T> {
        self.x[1..].iter().map(|&x| log_count(x)).collect()
    }

    /// Writes `t,sigma,x,c_exo`, one row per time point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,sigma,x,c_exo")?;
        for t in 0..self.x.len() {
            write!(w, "{t},{:?},{},", self.sigma[t], self.x[t])?;
            if t > 0 {
                write!(w, "{:?}", self.c_exo[t - 1])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// `ln(x + 1)`.
#[inline]
pub fn log_count<T: Real>(x: u64) -> T {
    T::of_u64(x).ln_1p()
}

/// Parameters that passed [`ModelParams::validate`], with their constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model<T> {
    params: ModelParams<T>,
    constants: DistributionConstants<T>,
}

impl<T: Real> Model<T> {
    pub fn new(params: ModelParams<T>) -> Result<Self> {
        let constants = params.validate()?;
        Ok(Model { params, constants })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn constants(&self) -> &DistributionConstants<T> {
        &self.constants
    }

    /// `a + bγ`.
    pub fn contraction(&self) -> T {
        self.params.a + self.params.b * self.constants.gamma
    }

    /// Draws `C_{t-1}`.
    pub fn exogenous<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> T {
        self.params.c * T::of_usize(t).ln() + self.params.exogenous.noise(rng)
    }

    /// `ln σ_t` from its inputs, guarded against explosion.
    pub fn log_intensity(&self, t: usize, log_sigma_prev: T, x_prev: u64, c_exo: T) -> Result<T> {
        let p = &self.params;
        let v = p.a * log_sigma_prev + p.b * log_count::<T>(x_prev) + c_exo;
        if v.is_finite() && v.abs() <= T::log_guard() {
            Ok(v)
        } else {
            Err(Error::Explosion { t, log_sigma: v.as_f64() })
        }
    }

    /// `⌊σ y⌋`, or an explosion error when the count leaves `u64`.
    pub fn count(&self, t: usize, log_sigma: T, sigma: T, y: T) -> Result<u64> {
        let v = sigma * y;
        if v.as_f64() >= 18_446_744_073_709_551_615.0 || !v.is_finite() {
            return Err(Error::Explosion { t, log_sigma: log_sigma.as_f64() });
        }
        Ok(v.floor().to_u64().unwrap_or(0))
    }

    /// One step of the recursion from `(σ_{t-1}, X_{t-1})`.
    pub fn step<R1, R2>(
        &self,
        (sigma_prev, x_prev): (T, u64),
        t: usize,
        innovations: &mut R1,
        exogenous: &mut R2,
    ) -> Result<Step<T>>
    where
        R1: Rng + ?Sized,
        R2: Rng + ?Sized,
    {
        if !(sigma_prev > T::zero()) {
            return Err(Error::domain(format!("sigma_prev must be > 0, got {sigma_prev}")));
        }
        let c_exo = self.exogenous(t, exogenous);
        let log_sigma = self.log_intensity(t, sigma_prev.ln(), x_prev, c_exo)?;
        let sigma = log_sigma.exp();
        let y = self.params.innovation.quantile(open01(innovations));
        let x = self.count(t, log_sigma, sigma, y)?;
        Ok(Step { sigma, x, c_exo, y })
    }

    /// Simulates `t = 0..=n` from explicit streams.
    pub fn simulate_with<R1, R2>(&self, n: usize, innovations: &mut R1, exogenous: &mut R2) -> Result<Trajectory<T>>
    where
        R1: Rng + ?Sized,
        R2: Rng + ?Sized,
    {
        let p = &self.params;
        let mut traj = Trajectory {
            sigma: Vec::with_capacity(n + 1),
            x: Vec::with_capacity(n + 1),
            c_exo: Vec::with_capacity(n),
            y: Vec::with_capacity(n + 1),
        };
        let mut log_sigma = p.sigma0.ln();
        let y0 = p.innovation.quantile(open01(innovations));
        let x0 = self.count(0, log_sigma, p.sigma0, y0)?;
        traj.sigma.push(p.sigma0);
        traj.x.push(x0);
        traj.y.push(y0);
        let mut x = x0;
        for t in 1..=n {
            let c_exo = self.exogenous(t, exogenous);
            log_sigma = self.log_intensity(t, log_sigma, x, c_exo)?;
            let sigma = log_sigma.exp();
            let y = p.innovation.quantile(open01(innovations));
            x = self.count(t, log_sigma, sigma, y)?;
            traj.sigma.push(sigma);
            traj.x.push(x);
            traj.c_exo.push(c_exo);
            traj.y.push(y);
        }
        Ok(traj)
    }

    /// Simulates `t = 0..=n`; a pure function of `seed`.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<Trajectory<T>> {
        let mut innovations = rng::stream(seed, &[tag::INNOVATION]);
        let mut exogenous = rng::stream(seed, &[tag::EXOGENOUS]);
        self.simulate_with(n, &mut innovations, &mut exogenous)
    }

    /// Mixing bound
    /// `(a+bγ)ⁿ Γ/(1−a) {2|ln σ₀| + (2b(‖p‖∞ + E ln⁺Y) + 2M)/(1−a−b)}`.
    pub fn theorem1_bound(&self, n: usize) -> T {
        let (p, k) = (&self.params, &self.constants);
        let two = T::lit(2.0);
        let brace = two * p.sigma0.ln().abs()
            + (two * p.b * (k.p_sup + k.e_ln_plus) + two * p.exogenous.m_bound()) / (T::one() - p.a - p.b);
        self.contraction().powi(n as i32) * k.big_gamma / (T::one() - p.a) * brace
    }

    /// The part of [`Self::theorem1_bound`] contributed by the terms `r > horizon`
    /// of its geometric series in `a`.
    pub fn truncation_bound(&self, n: usize, horizon: usize) -> T {
        self.theorem1_bound(n) * self.params.a.powi(horizon as i32 + 1)
    }

    /// Limit of `Cov(ln(X_t+1), ln(X_{t+u}+1))` as `t → ∞` under the trend model.
    pub fn autocovariance(&self, u: usize) -> T {
        let (a, b) = (self.params.a, self.params.b);
        let v = self.constants.var_ln_y;
        let r = a + b;
        let denom = T::one() - r * r;
        if u == 0 {
            v * (b * b / denom + T::one())
        } else {
            v * (b * b * r.powi(u as i32) / denom + b * r.powi(u as i32 - 1))
        }
    }

    /// Monte Carlo estimate of `t ↦ E ln(X_t + 1)` for `t = 0..=n`.
    pub fn mean_log_curve(&self, n: usize, replicates: usize, seed: u64) -> Result<MeanCurve<T>> {
        let m = mc::try_reduce(
            replicates,
            || Moments::new(n + 1),
            |acc, r| {
                let traj = self.simulate(n, rng::derive_seed(seed, &[tag::MEAN_CURVE, r as u64]))?;
                acc.push(traj.x.iter().map(|&x| log_count::<T>(x)));
                Ok(())
            },
            Moments::merge,
        )?;
        let scale = T::of_usize(replicates).sqrt();
        Ok(MeanCurve {
            replicates,
            mean: m.mean(),
            stderr: m.variance().into_iter().map(|v| v.sqrt() / scale).collect(),
        })
    }
}

/// Pointwise Monte Carlo mean with standard errors, indexed by `t = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCurve<T> {
    pub replicates: usize,
    pub mean: Vec<T>,
    pub stderr: Vec<T>,
}

impl<T: Real> MeanCurve<T> {
    /// Largest drop `mean[t] − mean[t+1]` measured in combined standard
    /// errors, over `t ≥ from`.
    pub fn max_standardized_drop(&self, from: usize) -> T {
        (from..self.mean.len().saturating_sub(1))
            .map(|t| {
                let se = (self.stderr[t].powi(2) + self.stderr[t + 1].powi(2)).sqrt();
                let drop = self.mean[t] - self.mean[t + 1];
                if se > T::zero() {
                    drop / se
                } else if drop > T::zero() {
                    T::infinity()
                } else {
                    T::neg_infinity()
                }
            })
            .fold(T::neg_infinity(), T::max)
    }
}

/// Validates `params`.
pub fn validate<T: Real>(params: &ModelParams<T>) -> Result<DistributionConstants<T>> {
    params.validate()
}

/// One step of the recursion; see [`Model::step`].
pub fn step<T: Real>(
    state: (T, u64),
    t: usize,
    params: &ModelParams<T>,
    innovations: &mut Stream,
    exogenous: &mut Stream,
) -> Result<Step<T>> {
    Model::new(*params)?.step(state, t, innovations, exogenous)
}

/// Simulates `t = 0..=n` deterministically from `seed`.
pub fn simulate<T: Real>(params: &ModelParams<T>, n: usize, seed: u64) -> Result<Trajectory<T>> {
    Model::new(*params)?.simulate(n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn reference() -> ModelParams<f64> {
        ModelParams::trend(0.1, 0.1, 2.0, InnovationSpec::exponential(1.0))
    }

    #[test]
    fn validate_accepts_and_rejects() {
        let k = reference().validate().unwrap();
        assert_eq!(k.gamma, 1.0);
        assert_abs_diff_eq!(Model::new(reference()).unwrap().contraction(), 0.2, epsilon = 1e-15);

        let err = ModelParams::trend(0.9, 0.2, 2.0, InnovationSpec::exponential(1.0))
            .validate()
            .unwrap_err();
        assert!(err.to_string().contains("contraction"), "{err}");
        match err {
            Error::Contraction { value, .. } => assert_abs_diff_eq!(value, 1.1, epsilon = 1e-12),
            e => panic!("{e}"),
        }

        // chi-square(3) has γ ≈ 1.0432, so 0.5 + 0.4γ ≈ 0.917 still contracts
        let chi3 = ModelParams::trend(0.5, 0.4, 2.0, InnovationSpec::chi_square(3.0));
        let k = chi3.validate().unwrap();
        assert_abs_diff_eq!(k.gamma, 1.043_222_681_420_344, epsilon = 1e-9);
        // chi-square(7) has γ ≈ 1.2702 > 1.25
        let chi7 = ModelParams::trend(0.5, 0.4, 2.0, InnovationSpec::chi_square(7.0));
        assert!(matches!(chi7.validate(), Err(Error::Contraction { gamma, .. }) if gamma > 1.25));
    }

    #[test]
    fn validate_rejects_bad_domain() {
        let mut p = reference();
        p.sigma0 = 0.5;
        assert!(matches!(p.validate(), Err(Error::Domain(_))));
        let mut p = reference();
        p.a = -0.1;
        assert!(matches!(p.validate(), Err(Error::Domain(_))));
    }

    #[test]
    fn step_examples() {
        let mut r1 = rng::stream(1, &[1]);
        let mut r2 = rng::stream(1, &[2]);
        let degenerate = ModelParams::trend(0.0, 0.0, 2.0, InnovationSpec::exponential(1.0));
        let s = step((37.0, 91), 10, &degenerate, &mut r1, &mut r2).unwrap();
        assert_abs_diff_eq!(s.sigma, 100.0, epsilon = 1e-12);

        let s = step((1.0, 0), 1, &reference(), &mut r1, &mut r2).unwrap();
        assert_eq!(s.sigma, 1.0);
        assert_eq!(s.c_exo, 0.0);

        let s = step((4.0, 7), 3, &reference(), &mut r1, &mut r2).unwrap();
        assert_abs_diff_eq!(s.sigma.ln(), 2.543_798, epsilon = 1e-6);
        assert_abs_diff_eq!(s.sigma, 12.7276, epsilon = 1e-3);
        assert_eq!(s.x, (s.sigma * s.y).floor() as u64);
    }

    #[test]
    fn empty_and_deterministic_paths() {
        let t0 = simulate(&reference(), 0, 5).unwrap();
        assert_eq!((t0.sigma.len(), t0.x.len(), t0.c_exo.len()), (1, 1, 0));
        assert_eq!(t0.sigma[0], 1.0);
        let a = simulate(&reference(), 300, 42).unwrap();
        let b = simulate(&reference(), 300, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, simulate(&reference(), 300, 43).unwrap());
    }

    #[test]
    fn intensity_dominates_trend() {
        let traj = simulate(&reference(), 500, 7).unwrap();
        for t in 1..=500 {
            assert!(traj.sigma[t] / (t as f64).powi(2) >= 1.0 - 1e-12, "t = {t}");
            assert_eq!(traj.x[t], (traj.sigma[t] * traj.y[t]).floor() as u64);
        }
    }

    #[test]
    fn explosion_is_reported() {
        let p = ModelParams::trend(0.0, 0.0, 300.0, InnovationSpec::exponential(1.0));
        match simulate(&p, 20, 1) {
            Err(Error::Explosion { t, .. }) => assert!(t >= 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn theorem_bound_examples() {
        let m = Model::new(reference()).unwrap();
        let e_ln_plus = 0.219_383_934_395_520_3;
        let expect0 = (1.0 / 0.9) * (0.2 * (1.0 + e_ln_plus)) / 0.8;
        assert_abs_diff_eq!(m.theorem1_bound(0), expect0, epsilon = 1e-9);
        for n in 0..30 {
            let ratio = m.theorem1_bound(n + 1) / m.theorem1_bound(n);
            assert_abs_diff_eq!(ratio, 0.2, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(m.truncation_bound(3, 2), m.theorem1_bound(3) * 1e-3, epsilon = 1e-18);
    }

    #[test]
    fn exogenous_noise_enters_bound() {
        let mut p = reference();
        p.exogenous = ExogenousSpec::IidLog {
            law: ExogenousLaw::Uniform { low: -1.0, high: 1.0 },
        };
        assert_eq!(p.exogenous.m_bound(), 0.5);
        let with = Model::new(p).unwrap();
        let without = Model::new(reference()).unwrap();
        assert_abs_diff_eq!(
            with.theorem1_bound(0) - without.theorem1_bound(0),
            (1.0 / 0.9) * 1.0 / 0.8,
            epsilon = 1e-12
        );
        let traj = with.simulate(50, 3).unwrap();
        for (j, c) in traj.c_exo.iter().enumerate() {
            let trend = 2.0 * ((j + 1) as f64).ln();
            assert!((c - trend).abs() <= 1.0);
        }
    }

    #[test]
    fn autocovariance_examples() {
        let v = std::f64::consts::PI.powi(2) / 6.0;
        let m = Model::new(reference()).unwrap();
        assert_abs_diff_eq!(m.autocovariance(0), v * (0.01 / 0.96 + 1.0), epsilon = 1e-9);
        assert_abs_diff_eq!(m.autocovariance(0), 1.66207, epsilon = 1e-5);
        assert_abs_diff_eq!(m.autocovariance(1), 0.167921, epsilon = 1e-6);
        let m = Model::new(ModelParams::trend(0.3, 0.0, 1.0, InnovationSpec::exponential(1.0))).unwrap();
        assert_abs_diff_eq!(m.autocovariance(0), v, epsilon = 1e-9);
        assert_eq!(m.autocovariance(1), 0.0);
        assert_eq!(m.autocovariance(4), 0.0);
    }

    #[test]
    fn csv_layout() {
        let traj = simulate(&reference(), 2, 9).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,sigma,x,c_exo");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,1.0,") && lines[1].ends_with(','));
        let fields: Vec<&str> = lines[3].split(',').collect();
        assert_eq!(fields[1].parse::<f64>().unwrap(), traj.sigma[2]);
        assert_eq!(fields[3].parse::<f64>().unwrap(), traj.c_exo[1]);
    }

    #[test]
    fn params_json_round_trip() {
        let json = r#"{"a":0.1,"b":0.1,"c":2.0,"sigma0":1.0,
            "innovation":{"family":"exponential","rate":1.0}}"#;
        let p: ModelParams<f64> = serde_json::from_str(json).unwrap();
        assert_eq!(p, reference());
        let mut q = reference();
        q.exogenous = ExogenousSpec::IidLog {
            law: ExogenousLaw::Normal { mean: 0.0, sd: 0.5 },
        };
        let back: ModelParams<f64> = serde_json::from_str(&serde_json::to_string(&q).unwrap()).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn single_precision_path() {
        let p = ModelParams::<f32>::trend(0.1, 0.1, 2.0, InnovationSpec::exponential(1.0));
        let traj = simulate(&p, 100, 1).unwrap();
        assert!(traj.sigma[100] >= 100f32.powi(2) * 0.999);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn sigma_at_least_trend(a in 0.0..0.4f64, b in 0.0..0.4f64, c in 0.1..1.0f64, seed in any::<u64>()) {
            let p = ModelParams::trend(a, b, c, InnovationSpec::half_normal_unit_mean());
            let traj = simulate(&p, 120, seed).unwrap();
            for t in 1..=120 {
                prop_assert!(traj.sigma[t].ln() >= c * (t as f64).ln() - 1e-9);
            }
        }
    }
}

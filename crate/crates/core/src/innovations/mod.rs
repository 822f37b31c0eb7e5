//! Innovation laws `Y ≥ 0`, their discretizations `⌊σY⌋` and the
//! density-derived constants that drive the mixing bound.
//!
//! Four families are built in. Each one exposes its density, CDF, survival
//! function and quantile in closed form or through special functions, so
//! sampling is pure inverse-transform from a single uniform stream.
//!
//! | family        | monotone density        | mode                 |
//! |---------------|-------------------------|----------------------|
//! | exponential   | yes                     | 0                    |
//! | half-normal   | yes                     | 0                    |
//! | chi-square    | iff `df <= 2`           | `df - 2`             |
//! | half-Cauchy   | iff `|μ| <= scale/√3`   | root of `p'` in (0, |μ|) |
//!
//! The half-Cauchy density is the fold of a Cauchy(μ, scale) law onto
//! `[0, ∞)`, normalized with the constant `scale/π`.

mod checks;
mod discrete;

pub use checks::{
    expected_log_count, la1_check, la2_check, tv_bound_check, La1Report, La2Report,
    TvBoundReport, TvPairCheck,
};
pub use discrete::{DiscretizedLaw, TvDistance};
pub(crate) use discrete::{smallest_true, to_count, SCAN_CAP};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, quad_tol};
use crate::rng::open01;
use crate::scalar::Real;
use crate::special::{erf, erf_inv_guess, erfc, gamma_p, gamma_q, ln_gamma};

/// A non-negative innovation law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InnovationSpec<T> {
    /// Density `rate · e^{-rate·x}`.
    Exponential { rate: T },
    /// Law of `|Z|` with `Z ~ N(0, scale²)`.
    HalfNormal { scale: T },
    /// Law of `|Z|` with `Z ~ Cauchy(location, scale)`.
    HalfCauchy { location: T, scale: T },
    /// Chi-square with `df >= 2` degrees of freedom (bounded density).
    ChiSquare { df: T },
}

/// Constants derived from the innovation density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionConstants<T> {
    /// `∫₀^∞ sup{p(y): y ≥ x} dx`.
    pub gamma: T,
    /// Lipschitz constant of `ln σ ↦ P_σ` in total variation.
    pub big_gamma: T,
    /// `‖p‖∞`.
    pub p_sup: T,
    /// `E ln⁺ Y`.
    pub e_ln_plus: T,
    /// `Var ln Y`.
    pub var_ln_y: T,
    /// `∫₀^∞ x |p'(x)| dx`.
    pub abs_dp_moment: T,
}

impl<T: Real> InnovationSpec<T> {
    pub fn exponential(rate: T) -> Self {
        InnovationSpec::Exponential { rate }
    }

    pub fn half_normal(scale: T) -> Self {
        InnovationSpec::HalfNormal { scale }
    }

    /// Half-normal law with `E Y = 1`, i.e. `scale = √(π/2)`.
    pub fn half_normal_unit_mean() -> Self {
        InnovationSpec::HalfNormal {
            scale: (T::PI() / T::lit(2.0)).sqrt(),
        }
    }

    pub fn half_cauchy(location: T, scale: T) -> Self {
        InnovationSpec::HalfCauchy { location, scale }
    }

    pub fn chi_square(df: T) -> Self {
        InnovationSpec::ChiSquare { df }
    }

    /// Short family name used in tables and file headers.
    pub fn family(&self) -> &'static str {
        match self {
            InnovationSpec::Exponential { .. } => "exponential",
            InnovationSpec::HalfNormal { .. } => "half_normal",
            InnovationSpec::HalfCauchy { .. } => "half_cauchy",
            InnovationSpec::ChiSquare { .. } => "chi_square",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: T| v.is_finite() && v > T::zero();
        match *self {
            InnovationSpec::Exponential { rate } if !ok(rate) => {
                Err(Error::domain(format!("exponential rate must be > 0, got {rate}")))
            }
            InnovationSpec::HalfNormal { scale } if !ok(scale) => {
                Err(Error::domain(format!("half-normal scale must be > 0, got {scale}")))
            }
            InnovationSpec::HalfCauchy { location, scale } if !ok(scale) || !location.is_finite() => {
                Err(Error::domain(format!(
                    "half-Cauchy needs finite location and scale > 0, got ({location}, {scale})"
                )))
            }
            InnovationSpec::ChiSquare { df } if !(df.is_finite() && df >= T::lit(2.0)) => {
                Err(Error::domain(format!(
                    "chi-square needs df >= 2 for a bounded density, got {df}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Density `p(x)`; zero for `x < 0`.
    pub fn density(&self, x: T) -> T {
        if x < T::zero() {
            return T::zero();
        }
        match *self {
            InnovationSpec::Exponential { rate } => rate * (-rate * x).exp(),
            InnovationSpec::HalfNormal { scale } => {
                let z = x / scale;
                (T::lit(2.0) / T::PI()).sqrt() / scale * (-z * z / T::lit(2.0)).exp()
            }
            InnovationSpec::HalfCauchy { location, scale } => {
                let g2 = scale * scale;
                let dm = x - location;
                let dp = x + location;
                scale / T::PI() * (T::one() / (dm * dm + g2) + T::one() / (dp * dp + g2))
            }
            InnovationSpec::ChiSquare { df } => {
                let h = df / T::lit(2.0);
                if x == T::zero() {
                    return if h == T::one() { T::lit(0.5) } else { T::zero() };
                }
                ((h - T::one()) * x.ln() - x / T::lit(2.0) - h * T::lit(2.0).ln() - ln_gamma(h)).exp()
            }
        }
    }

    /// Derivative `p'(x)` on `(0, ∞)`.
    pub fn density_derivative(&self, x: T) -> T {
        let two = T::lit(2.0);
        match *self {
            InnovationSpec::Exponential { rate } => -rate * self.density(x),
            InnovationSpec::HalfNormal { scale } => -x / (scale * scale) * self.density(x),
            InnovationSpec::HalfCauchy { location, scale } => {
                let g2 = scale * scale;
                let dm = x - location;
                let dp = x + location;
                let qm = dm * dm + g2;
                let qp = dp * dp + g2;
                -two * scale / T::PI() * (dm / (qm * qm) + dp / (qp * qp))
            }
            InnovationSpec::ChiSquare { df } => {
                let h = df / two;
                self.density(x) * ((h - T::one()) / x - T::lit(0.5))
            }
        }
    }

    /// `F(x) = P(Y ≤ x)`.
    pub fn cdf(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        match *self {
            InnovationSpec::Exponential { rate } => -(-rate * x).exp_m1(),
            InnovationSpec::HalfNormal { scale } => {
                erf(x / (scale * T::SQRT_2()))
            }
            InnovationSpec::HalfCauchy { location, scale } => {
                (((x - location) / scale).atan() + ((x + location) / scale).atan()) / T::PI()
            }
            InnovationSpec::ChiSquare { df } => gamma_p(df / T::lit(2.0), x / T::lit(2.0)),
        }
    }

    /// Survival function `S(x) = P(Y > x)`, accurate in the upper tail.
    pub fn sf(&self, x: T) -> T {
        if x <= T::zero() {
            return T::one();
        }
        match *self {
            InnovationSpec::Exponential { rate } => (-rate * x).exp(),
            InnovationSpec::HalfNormal { scale } => {
                erfc(x / (scale * T::SQRT_2()))
            }
            InnovationSpec::HalfCauchy { location, scale } => {
                // arctan complement, exact for x beyond |μ|
                let tail = |d: T| {
                    if d > T::zero() {
                        (scale / d).atan()
                    } else {
                        T::FRAC_PI_2() - (d / scale).atan()
                    }
                };
                (tail(x - location) + tail(x + location)) / T::PI()
            }
            InnovationSpec::ChiSquare { df } => gamma_q(df / T::lit(2.0), x / T::lit(2.0)),
        }
    }

    /// `F⁻¹(u)` for `u ∈ (0, 1)`.
    pub fn quantile(&self, u: T) -> T {
        self.quantile_split(u, T::one() - u)
    }

    /// `F⁻¹(1 - q)`, accurate for tiny upper-tail probabilities `q`.
    pub fn quantile_upper(&self, q: T) -> T {
        self.quantile_split(T::one() - q, q)
    }

    /// Quantile given both `u` and `q = 1 - u` so neither loses precision.
    fn quantile_split(&self, u: T, q: T) -> T {
        if u <= T::zero() {
            return T::zero();
        }
        if q <= T::zero() {
            return T::infinity();
        }
        let half = T::lit(0.5);
        match *self {
            InnovationSpec::Exponential { rate } => {
                if u < half {
                    -(-u).ln_1p() / rate
                } else {
                    -q.ln() / rate
                }
            }
            InnovationSpec::HalfNormal { scale } => {
                let z0 = erf_inv_guess(u.as_f64(), q.as_f64());
                let x0 = T::lit(z0 * std::f64::consts::SQRT_2) * scale;
                self.invert(u, q, x0)
            }
            InnovationSpec::HalfCauchy { location, scale } => {
                // atan(A) + atan(B) = πu with A, B = (x ∓ μ)/γ gives
                // x² + 2γ cot(πu) x − (γ² + μ²) = 0.
                let cot = if u <= half {
                    T::one() / (T::PI() * u).tan()
                } else {
                    -T::one() / (T::PI() * q).tan()
                };
                let gc = scale * cot;
                let r2 = scale * scale + location * location;
                let root = (gc * gc + r2).sqrt();
                if gc > T::zero() {
                    r2 / (gc + root)
                } else {
                    root - gc
                }
            }
            InnovationSpec::ChiSquare { df } => {
                let x0 = df.max(T::one());
                self.invert(u, q, x0)
            }
        }
    }

    // Safeguarded Newton iteration on F(x) = u (or S(x) = q in the upper half).
    fn invert(&self, u: T, q: T, guess: T) -> T {
        let upper = u > T::lit(0.5);
        let g = |x: T| if upper { q - self.sf(x) } else { self.cdf(x) - u };
        let mut lo = T::zero();
        let mut hi = if guess.is_finite() && guess > T::zero() { guess } else { T::one() };
        while g(hi) < T::zero() {
            lo = hi;
            hi = hi * T::lit(2.0);
            if !hi.is_finite() {
                return T::max_value();
            }
        }
        let mut x = if guess >= lo && guess <= hi { guess } else { T::lit(0.5) * (lo + hi) };
        for _ in 0..200 {
            let gx = g(x);
            if gx == T::zero() {
                return x;
            }
            if gx < T::zero() {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.density(x);
            let newton = x - gx / d;
            let tol = T::lit(4.0) * T::epsilon() * x.max(T::min_positive_value());
            if d > T::zero() && (newton - x).abs() <= tol {
                return newton.max(lo).min(hi);
            }
            let next = if d > T::zero() && newton > lo && newton < hi {
                newton
            } else {
                T::lit(0.5) * (lo + hi)
            };
            if hi - lo <= tol {
                return next;
            }
            x = next;
        }
        x
    }

    /// Inverse-transform draw of `Y`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.quantile(open01(rng))
    }

    /// Whether `p` is non-increasing on `[0, ∞)`.
    pub fn monotone_density(&self) -> bool {
        match *self {
            InnovationSpec::Exponential { .. } | InnovationSpec::HalfNormal { .. } => true,
            InnovationSpec::ChiSquare { df } => df <= T::lit(2.0),
            InnovationSpec::HalfCauchy { location, scale } => {
                location.abs() <= scale / T::lit(3.0).sqrt()
            }
        }
    }

    /// Location of the global maximum of `p` on `[0, ∞)`.
    pub fn mode(&self) -> T {
        if self.monotone_density() {
            return T::zero();
        }
        match *self {
            InnovationSpec::ChiSquare { df } => df - T::lit(2.0),
            InnovationSpec::HalfCauchy { location, .. } => {
                // p' > 0 on (0, mode) and < 0 on (mode, |μ|]
                let (mut lo, mut hi) = (T::zero(), location.abs());
                for _ in 0..200 {
                    let mid = T::lit(0.5) * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.density_derivative(mid) > T::zero() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                T::lit(0.5) * (lo + hi)
            }
            _ => T::zero(),
        }
    }

    /// `F⁻¹(1 − 10⁻¹²)`, the point beyond which series are truncated.
    pub fn tail_quantile(&self) -> T {
        match *self {
            InnovationSpec::HalfNormal { scale } => T::lit(7.130_506_848_171_324) * scale,
            _ => self.quantile_upper(T::lit(discrete::TAIL_MASS)),
        }
    }

    pub fn median(&self) -> T {
        match *self {
            InnovationSpec::HalfNormal { scale } => T::lit(0.674_489_750_196_081_7) * scale,
            _ => self.quantile(T::lit(0.5)),
        }
    }

    /// Whether `σ ↦ P_σ` has monotone likelihood ratios, so two discretized
    /// laws of this family cross exactly once.
    pub fn scale_mlr(&self) -> bool {
        match *self {
            InnovationSpec::Exponential { .. }
            | InnovationSpec::HalfNormal { .. }
            | InnovationSpec::ChiSquare { .. } => true,
            InnovationSpec::HalfCauchy { location, .. } => location == T::zero(),
        }
    }

    /// Density-derived constants (γ, Γ, ‖p‖∞, E ln⁺Y, Var ln Y).
    pub fn constants(&self) -> Result<DistributionConstants<T>> {
        self.validate()?;
        let tol = quad_tol::<T>();
        let (gamma, big_gamma, p_sup, abs_dp_moment) = if self.monotone_density() {
            // ∫ x|p'| = -∫ x p' = ∫ p = 1 for a non-increasing density
            (T::one(), T::one(), self.density(T::zero()), T::one())
        } else {
            let m = self.mode();
            let pm = self.density(m);
            let gamma = m * pm + self.sf(m);
            // p increases on (0, m) and decreases afterwards; integrate x p' by parts
            let moment = T::lit(2.0) * m * pm - self.cdf(m) + self.sf(m);
            (gamma, (T::one() + moment) / T::lit(2.0), pm, moment)
        };
        let log_moment = |power: i32| {
            quadrature::integrate_real_line(
                |u: T| {
                    let y = u.exp();
                    u.powi(power) * self.density(y) * y
                },
                tol,
            )
        };
        let e_ln_plus = quadrature::integrate_to_inf(
            |u: T| {
                let y = u.exp();
                u * self.density(y) * y
            },
            T::zero(),
            tol,
        )?;
        let m1 = log_moment(1)?;
        let m2 = log_moment(2)?;
        let var_ln_y = m2 - m1 * m1;
        let out = DistributionConstants {
            gamma,
            big_gamma,
            p_sup,
            e_ln_plus,
            var_ln_y,
            abs_dp_moment,
        };
        if [gamma, big_gamma, p_sup, e_ln_plus, var_ln_y]
            .iter()
            .all(|v| v.is_finite())
        {
            Ok(out)
        } else {
            Err(Error::numeric(format!(
                "non-finite constants for {}: {out:?}",
                self.family()
            )))
        }
    }

    /// γ from a monotone envelope of `p` sampled on `points` grid nodes.
    ///
    /// Independent of the analytic mode; the running supremum is taken from
    /// the right over the grid and integrated with the trapezoid rule, with
    /// the mass beyond the grid added as a tail term.
    pub fn gamma_by_envelope(&self, points: usize) -> T {
        let points = points.max(2);
        let x_max = self.quantile_upper(T::lit(1e-9));
        let h = x_max / T::of_usize(points - 1);
        let mut env = vec![T::zero(); points];
        let mut run = T::zero();
        for i in (0..points).rev() {
            run = run.max(self.density(T::of_usize(i) * h));
            env[i] = run;
        }
        let inner: T = env.windows(2).map(|w| (w[0] + w[1]) * h / T::lit(2.0)).sum();
        inner + self.sf(x_max)
    }
}

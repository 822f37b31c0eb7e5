//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Default absolute tolerance for density integrals.
pub const ABS_TOL: f64 = 1e-10;
const MAX_INTERVALS: usize = 4_000;

/// [`ABS_TOL`], loosened to what the scalar type can resolve.
pub fn quad_tol<T: Real>() -> T {
    T::lit(ABS_TOL).max(T::epsilon() * T::lit(64.0))
}

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Segment<T> {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = radius * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + T::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * radius,
        error: ((kronrod - gauss) * radius).abs(),
    }
}

/// Integrates `f` over the finite interval `[a, b]` to absolute tolerance `tol`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let mut segments = vec![kronrod(&f, a, b)];
    loop {
        let (total, err) = segments
            .iter()
            .fold((T::zero(), T::zero()), |(v, e), s| (v + s.value, e + s.error));
        if !total.is_finite() {
            return Err(Error::numeric("non-finite integrand"));
        }
        if err <= tol {
            return Ok(total);
        }
        if segments.len() >= MAX_INTERVALS {
            return Err(Error::numeric(format!(
                "quadrature did not converge: estimate {total}, error {err}"
            )));
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let s = segments.swap_remove(worst);
        let mid = T::lit(0.5) * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // interval exhausted at machine precision; keep its estimate
            segments.push(Segment { error: T::zero(), ..s });
            continue;
        }
        segments.push(kronrod(&f, s.a, mid));
        segments.push(kronrod(&f, mid, s.b));
    }
}

/// Integrates over `[a, ∞)` through the substitution `x = a + s/(1-s)`.
pub fn integrate_to_inf<T: Real, F: Fn(T) -> T>(f: F, a: T, tol: T) -> Result<T> {
    integrate(
        |s: T| {
            let one_minus = T::one() - s;
            let x = a + s / one_minus;
            let v = f(x) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                T::zero()
            }
        },
        T::zero(),
        T::one(),
        tol,
    )
}

/// Integrates over the whole real line through `u = s/(1-s²)`.
pub fn integrate_real_line<T: Real, F: Fn(T) -> T>(f: F, tol: T) -> Result<T> {
    integrate(
        |s: T| {
            let d = T::one() - s * s;
            let u = s / d;
            let v = f(u) * (T::one() + s * s) / (d * d);
            if v.is_finite() {
                v
            } else {
                T::zero()
            }
        },
        -T::one(),
        T::one(),
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x: f64| 3.0 * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 8.0, epsilon = 1e-13);
    }

    #[test]
    fn log_singularity() {
        // ∫_0^1 ln²x dx = 2
        let v = integrate(|x: f64| x.ln().powi(2), 0.0, 1.0, 1e-10).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn semi_infinite_and_real_line() {
        let v = integrate_to_inf(|x: f64| (-x).exp(), 0.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-11);
        let g = integrate_real_line(|x: f64| (-x * x / 2.0).exp(), 1e-12).unwrap();
        assert_abs_diff_eq!(g, (2.0 * std::f64::consts::PI).sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn works_in_single_precision() {
        let v = integrate(|x: f32| x.sin(), 0.0, std::f32::consts::PI, 1e-5).unwrap();
        assert!((v - 2.0).abs() < 1e-5);
    }
}

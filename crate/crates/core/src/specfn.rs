//! Special functions: regularized upper incomplete gamma for integer order,
//! log-gamma at integers, and the scaled complementary error function.

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// `ln Γ(n)` for integer `n ≥ 1`.
///
/// Exact factorials are used up to `n = 21`, a Stirling series beyond.
pub fn log_gamma(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n", "log_gamma requires n >= 1"));
    }
    Ok(ln_factorial(n - 1))
}

/// `ln(e^{−a}·a^m/m!)`, accurate in absolute terms even when `m` and `a`
/// are large and close to each other.
pub fn ln_poisson_term(m: u32, a: f64) -> f64 {
    if a == 0.0 {
        return if m == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if m <= 20 {
        return -a + m as f64 * a.ln() - ln_factorial(m);
    }
    let mf = m as f64;
    let e = (a - mf) / mf;
    mf * (e.ln_1p() - e) - 0.5 * (std::f64::consts::TAU * mf).ln() - stirling_tail(mf)
}

fn stirling_tail(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0
        - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
}

/// `ln m!` for any `m ≥ 0`.
pub fn ln_factorial(m: u32) -> f64 {
    if m <= 20 {
        let mut f = 1.0_f64;
        for k in 2..=m {
            f *= k as f64;
        }
        return f.ln();
    }
    let x = m as f64 + 1.0;
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + stirling_tail(x)
}

fn check_gamma_args(n: u32, a: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("n", "incomplete gamma order must be >= 1"));
    }
    if !a.is_finite() || a < 0.0 {
        return Err(Error::domain(
            "a",
            format!("incomplete gamma cutoff must be finite and >= 0, got {a}"),
        ));
    }
    Ok(())
}

/// `Q(n, a) = Γ(n, a)/Γ(n) = e^{−a} Σ_{m<n} a^m/m!`.
pub fn regularized_gamma_upper(n: u32, a: f64) -> Result<f64> {
    Ok(ln_regularized_gamma_upper(n, a)?.exp().min(1.0))
}

/// `ln Q(n, a)`, finite wherever `Q` underflows.
pub fn ln_regularized_gamma_upper(n: u32, a: f64) -> Result<f64> {
    check_gamma_args(n, a)?;
    if a == 0.0 {
        return Ok(0.0);
    }
    if a < n as f64 {
        Ok(ln_series(n, a))
    } else {
        ln_continued_fraction(n, a)
    }
}

/// Regularized lower incomplete gamma `P(n, a) = 1 − Q(n, a)`.
pub fn regularized_gamma_lower(n: u32, a: f64) -> Result<f64> {
    check_gamma_args(n, a)?;
    if a == 0.0 {
        return Ok(0.0);
    }
    if a < n as f64 {
        // the complementary tail Σ_{m ≥ n} is the small one here
        let ln_t0 = ln_poisson_term(n, a);
        let mut term = 1.0_f64;
        let mut sum = 1.0_f64;
        let mut m = n as f64;
        loop {
            m += 1.0;
            term *= a / m;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        Ok((ln_t0 + sum.ln()).exp().min(1.0))
    } else {
        Ok(1.0 - regularized_gamma_upper(n, a)?)
    }
}

fn ln_series(n: u32, a: f64) -> f64 {
    let top = n - 1;
    let peak = (a.floor() as u32).min(top);
    let ln_peak = ln_poisson_term(peak, a);
    let mut sum = 1.0_f64;
    let mut term = 1.0_f64;
    let mut m = peak;
    while m > 0 {
        term *= m as f64 / a;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        m -= 1;
    }
    term = 1.0;
    let mut m = peak;
    while m < top {
        m += 1;
        term *= a / m as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    ln_peak + sum.ln()
}

fn ln_continued_fraction(n: u32, a: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let nf = n as f64;
    let mut b = a + 1.0 - nf;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..100_000 {
        let an = -(i as f64) * (i as f64 - nf);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            return Ok(ln_poisson_term(n, a) + nf.ln() + h.ln());
        }
    }
    Err(Error::Quadrature(format!(
        "incomplete gamma continued fraction did not converge (n={n}, a={a})"
    )))
}

const CODY_A: [f64; 5] = [
    3.161_123_743_870_565_6,
    113.864_154_151_050_16,
    377.485_237_685_302,
    3_209.377_589_138_469_5,
    0.185_777_706_184_603_15,
];
const CODY_B: [f64; 4] = [
    23.601_290_952_344_12,
    244.024_637_934_444_17,
    1_282.616_526_077_372_3,
    2_844.236_833_439_170_6,
];
const CODY_C: [f64; 9] = [
    0.564_188_496_988_670_1,
    8.883_149_794_388_376,
    66.119_190_637_141_63,
    298.635_138_197_400_1,
    881.952_221_241_769_1,
    1_712.047_612_634_070_6,
    2_051.078_377_826_071_5,
    1_230.339_354_797_997_2,
    2.153_115_354_744_038_5e-8,
];
const CODY_D: [f64; 8] = [
    15.744_926_110_709_835,
    117.693_950_891_312_5,
    537.181_101_862_009_9,
    1_621.389_574_566_690_2,
    3_290.799_235_733_459_6,
    4_362.619_090_143_247,
    3_439.367_674_143_721_6,
    1_230.339_354_803_749_4,
];
const CODY_P: [f64; 6] = [
    0.305_326_634_961_232_36,
    0.360_344_899_949_804_45,
    0.125_781_726_111_229_26,
    0.016_083_785_148_742_275,
    6.587_491_615_298_378e-4,
    0.016_315_387_137_302_097,
];
const CODY_Q: [f64; 5] = [
    2.568_520_192_289_822,
    1.872_952_849_923_460_4,
    0.527_905_102_951_428_4,
    0.060_518_341_312_441_32,
    0.002_335_204_976_268_691_8,
];

/// `e^{s²}·erfc(s)` for `s ≥ 0`.
pub fn erfcx(s: f64) -> Result<f64> {
    if !s.is_finite() || s < 0.0 {
        return Err(Error::domain(
            "s",
            format!("erfcx requires a finite s >= 0, got {s}"),
        ));
    }
    if s <= 0.468_75 {
        let z = s * s;
        let (a, b) = (&CODY_A, &CODY_B);
        let num = (((a[4] * z + a[0]) * z + a[1]) * z + a[2]) * z + a[3];
        let den = (((z + b[0]) * z + b[1]) * z + b[2]) * z + b[3];
        return Ok(z.exp() * (1.0 - s * num / den));
    }
    if s <= 4.0 {
        let (c, d) = (&CODY_C, &CODY_D);
        let mut num = c[8] * s;
        let mut den = s;
        for i in 0..7 {
            num = (num + c[i]) * s;
            den = (den + d[i]) * s;
        }
        return Ok((num + c[7]) / (den + d[7]));
    }
    if s > 1e8 {
        return Ok(FRAC_1_SQRT_PI / s);
    }
    let z = 1.0 / (s * s);
    let (p, q) = (&CODY_P, &CODY_Q);
    let mut num = p[5] * z;
    let mut den = z;
    for i in 0..4 {
        num = (num + p[i]) * z;
        den = (den + q[i]) * z;
    }
    let pq = z * (num + p[4]) / (den + q[4]);
    Ok((FRAC_1_SQRT_PI - pq) / s)
}

/// `erfc(s)` for `s ≥ 0`, via [`erfcx`].
pub fn erfc(s: f64) -> Result<f64> {
    Ok(erfcx(s)? * (-s * s).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn gamma_ratio_small_cases() {
        assert_eq!(regularized_gamma_upper(5, 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            regularized_gamma_upper(1, 2.0).unwrap(),
            (-2.0_f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            regularized_gamma_upper(3, 1.0).unwrap(),
            (-1.0_f64).exp() * 2.5,
            max_relative = 1e-15
        );
    }

    #[test]
    fn gamma_ratio_rejects_bad_args() {
        assert!(regularized_gamma_upper(0, 1.0).is_err());
        assert!(regularized_gamma_upper(3, -1e-3).is_err());
        assert!(regularized_gamma_upper(3, f64::NAN).is_err());
        assert!(regularized_gamma_upper(3, f64::INFINITY).is_err());
    }

    #[test]
    fn gamma_ratio_branches_meet() {
        for &n in &[2u32, 10, 57, 400, 10_000] {
            let a = n as f64;
            let below = ln_series(n, a * (1.0 - 1e-12));
            let above = ln_continued_fraction(n, a).unwrap();
            assert_relative_eq!(below.exp(), above.exp(), max_relative = 1e-10);
        }
    }

    #[test]
    fn gamma_ratio_large_arguments() {
        // Q(n, n) → 1/2 as n grows
        let q = regularized_gamma_upper(10_000, 10_000.0).unwrap();
        assert!((q - 0.5).abs() < 3e-3, "{q}");
        let q = regularized_gamma_upper(10_000, 1e4 * 0.9).unwrap();
        assert!(q > 0.999_999);
        let lq = ln_regularized_gamma_upper(100, 10_000.0).unwrap();
        assert!(lq.is_finite() && lq < -9000.0);
        assert_eq!(regularized_gamma_upper(100, 10_000.0).unwrap(), 0.0);
    }

    #[test]
    fn gamma_lower_complements_upper() {
        for &(n, a) in &[(3u32, 0.2), (8, 5.0), (8, 12.0), (200, 150.0)] {
            let p = regularized_gamma_lower(n, a).unwrap();
            let q = regularized_gamma_upper(n, a).unwrap();
            assert_relative_eq!(p + q, 1.0, max_relative = 1e-14);
        }
        let a = 0.01_f64;
        let tail: f64 = (5..12).map(|m| a.powi(m) / (1..=m).product::<i32>() as f64).sum();
        let p = regularized_gamma_lower(5, a).unwrap();
        assert_relative_eq!(p, (-a).exp() * tail, max_relative = 1e-14);
    }

    #[test]
    fn gamma_tail_vanishes() {
        for n in 5..60 {
            let q = regularized_gamma_upper(n, 10.0 * n as f64).unwrap();
            assert!(q <= 1e-6, "n={n}: {q}");
        }
    }

    #[test]
    fn log_gamma_values() {
        assert_eq!(log_gamma(1).unwrap(), 0.0);
        assert_relative_eq!(log_gamma(5).unwrap(), 24.0_f64.ln(), max_relative = 1e-15);
        let direct: f64 = (1..=170).map(|k| (k as f64).ln()).sum();
        assert_relative_eq!(log_gamma(171).unwrap(), direct, max_relative = 1e-13);
        assert!(log_gamma(0).is_err());
        for n in 20..40u32 {
            let direct: f64 = (1..n).map(|k| (k as f64).ln()).sum();
            assert_relative_eq!(log_gamma(n).unwrap(), direct, max_relative = 1e-13);
        }
    }

    #[test]
    fn erfcx_values() {
        assert_eq!(erfcx(0.0).unwrap(), 1.0);
        assert_relative_eq!(erfcx(1.0).unwrap(), 0.427_583_576_155_807, max_relative = 1e-12);
        let s = 30.0_f64;
        let asym = FRAC_1_SQRT_PI / s * (1.0 - 1.0 / (2.0 * s * s));
        assert_relative_eq!(erfcx(s).unwrap(), asym, max_relative = 1e-4);
        assert_relative_eq!(erfcx(1e12).unwrap() * 1e12 * std::f64::consts::PI.sqrt(), 1.0, max_relative = 1e-12);
        assert!(erfcx(-1e-9).is_err());
    }

    #[test]
    fn erfcx_is_decreasing() {
        let mut prev = erfcx(0.0).unwrap();
        for i in 1..4000 {
            let v = erfcx(i as f64 * 0.005).unwrap();
            assert!(v < prev, "not decreasing at {}", i as f64 * 0.005);
            prev = v;
        }
    }

    #[test]
    fn erfc_matches_quadrature() {
        let spec = QuadSpec {
            abs_tol: 0.0,
            rel_tol: 1e-13,
            ..QuadSpec::default()
        };
        for i in 0..=24 {
            let s = i as f64 * 0.25;
            let tail = integrate(|t| (-t * t).exp(), s, s + 12.0, &spec).unwrap();
            let reference = 2.0 / std::f64::consts::PI.sqrt() * tail;
            assert_relative_eq!(erfc(s).unwrap(), reference, max_relative = 1e-9);
        }
    }

    proptest! {
        #[test]
        fn gamma_recurrence(n in 1u32..=200, a in 0.0f64..400.0) {
            let q0 = regularized_gamma_upper(n, a).unwrap();
            let q1 = regularized_gamma_upper(n + 1, a).unwrap();
            let step = if a == 0.0 { 0.0 } else {
                ln_poisson_term(n, a).exp()
            };
            prop_assert!(((q1 - q0) - step).abs() <= 1e-12 * q1.max(1e-300) + 1e-300);
        }

        #[test]
        fn gamma_bounded_and_monotone(n in 1u32..=500, a in 0.0f64..1000.0, da in 0.0f64..10.0) {
            let q = regularized_gamma_upper(n, a).unwrap();
            let q2 = regularized_gamma_upper(n, a + da).unwrap();
            prop_assert!((0.0..=1.0).contains(&q));
            prop_assert!(q2 <= q * (1.0 + 1e-13));
        }
    }
}

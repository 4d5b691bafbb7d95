//! Densities of the interpolating real/complex Ginibre ensemble
//! `X = G1·√((1+τ)/2) + i·G2·√((1−τ)/2)` and its limits.

use std::f64::consts::{FRAC_1_PI, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{try_integrate, try_integrate_breaks, try_integrate_semi_infinite, QuadSpec};
use crate::specfn::{erfcx, ln_factorial, ln_regularized_gamma_upper, regularized_gamma_upper};

/// A point of the complex plane.
pub type ComplexPoint = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpParams {
    pub tau: f64,
    pub n: u32,
}

impl InterpParams {
    pub fn new(tau: f64, n: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::domain("tau", format!("must lie in [0, 1], got {tau}")));
        }
        if n < 2 {
            return Err(Error::domain("n", format!("must be >= 2, got {n}")));
        }
        Ok(InterpParams { tau, n })
    }

    fn check(&self) -> Result<()> {
        InterpParams::new(self.tau, self.n).map(|_| ())
    }
}

/// The self-overlap `|vᵀv|²`, either raw or multiplied by `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapValue {
    pub u: f64,
    pub scaled: bool,
}

impl OverlapValue {
    pub fn raw(u: f64) -> Self {
        OverlapValue { u, scaled: false }
    }

    pub fn scaled(u_tilde: f64) -> Self {
        OverlapValue {
            u: u_tilde,
            scaled: true,
        }
    }

    /// The raw overlap for matrix size `n`.
    pub fn unscaled(&self, n: u32) -> f64 {
        if self.scaled {
            self.u / n as f64
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakNonRealityParams {
    pub delta: f64,
    pub x_tilde: f64,
    pub delta_x: f64,
}

impl WeakNonRealityParams {
    pub fn new(delta: f64, x_tilde: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::domain("delta", format!("must be finite and >= 0, got {delta}")));
        }
        if !(x_tilde.abs() < 1.0) {
            return Err(Error::domain("x_tilde", format!("must satisfy |x| < 1, got {x_tilde}")));
        }
        Ok(WeakNonRealityParams {
            delta,
            x_tilde,
            delta_x: delta * (1.0 - x_tilde * x_tilde).sqrt(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeakForm {
    Integral,
    Closed,
}

fn check_point(z: ComplexPoint) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::domain("z", "must be finite"));
    }
    Ok(())
}

/// Joint density of an eigenvalue `z` and its normalized right eigenvector,
/// which enters only through `u = |vᵀv|²`.
pub fn jpd_interpolating(p: InterpParams, z: ComplexPoint, u: OverlapValue) -> Result<f64> {
    p.check()?;
    check_point(z)?;
    let u = u.unscaled(p.n);
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::domain("u", format!("must lie in [0, 1], got {u}")));
    }
    let tau = p.tau;
    let (x2, y2) = (z.re * z.re, z.im * z.im);
    if tau == 1.0 && z.im == 0.0 {
        return Err(Error::domain(
            "z",
            "tau = 1 on the real axis is singular; use ginoe_real_density",
        ));
    }
    let d = 1.0 - tau * tau * u;
    if d <= 0.0 {
        return Ok(0.0);
    }
    let r2 = x2 + y2;
    let nf = p.n as f64;
    let ln_pre = -0.5 * nf * d.ln() - (tau * u / d) * (tau * r2 - x2 + y2);
    let lq_n = ln_regularized_gamma_upper(p.n, r2)?;
    let lq_m = ln_regularized_gamma_upper(p.n - 1, r2)?;
    let ratio = (lq_n - lq_m).exp();
    let w = (1.0 - u) / d;
    let bracket = (1.0 - tau * tau) / d * ratio
        + w * (tau * tau * r2 - 2.0 * tau * (x2 - y2) + tau * tau * r2 * w) / (nf - 1.0);
    Ok(((ln_pre + lq_m).exp() * bracket * FRAC_1_PI).max(0.0))
}

/// Density in `u` of the self-overlap at a fixed eigenvalue `z`:
/// the joint density times the Haar weight `(N−1)/2·(1−u)^{(N−3)/2}`.
pub fn jpd_overlap_marginal(p: InterpParams, z: ComplexPoint, u: f64) -> Result<f64> {
    let jpd = jpd_interpolating(p, z, OverlapValue::raw(u))?;
    if jpd == 0.0 {
        return Ok(0.0);
    }
    let nf = p.n as f64;
    Ok(0.5 * (nf - 1.0) * (1.0 - u).powf(0.5 * (nf - 3.0)) * jpd)
}

/// Mean eigenvalue density for `0 ≤ τ < 1`, integrating to `N`.
pub fn mean_density_interpolating(p: InterpParams, z: ComplexPoint, quad: &QuadSpec) -> Result<f64> {
    p.check()?;
    check_point(z)?;
    let tau = p.tau;
    if tau >= 1.0 {
        return Err(Error::domain(
            "tau",
            "tau = 1 is excluded; use ginoe_complex_density or ginoe_real_density",
        ));
    }
    let (x2, y2) = (z.re * z.re, z.im * z.im);
    let r2 = x2 + y2;
    let nf = p.n as f64;
    let lq_m = ln_regularized_gamma_upper(p.n - 1, r2)?;
    if lq_m == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let ratio = (ln_regularized_gamma_upper(p.n, r2)? - lq_m).exp();
    let eps = 1.0 - tau;
    let s_max = 1.0 / eps;
    let integrand = |s: f64| -> Result<f64> {
        let w = (1.0 - eps * s).max(0.0);
        let ln_w = if p.n == 2 { 0.0 } else { (nf - 2.0) * w.ln() };
        let expo = tau * eps * s * (1.0 + w) * x2 / (1.0 + tau) - tau * s * (1.0 + w) * y2;
        let jac = ((1.0 + tau) * (1.0 + tau * s) * (1.0 + tau * w)).sqrt();
        let brace = (nf - 1.0) * ratio * eps * (1.0 + tau * s) * (1.0 + tau * w)
            + tau * w * w * (tau * r2 * (1.0 + w * w) - 2.0 * (x2 - y2));
        let e = ln_w + expo + lq_m;
        if e == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        Ok(e.exp() * brace / jac)
    };
    let mut breaks = vec![0.0];
    let mut b = 1.0;
    while b < s_max {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(s_max);
    let v = try_integrate_breaks(integrand, &breaks, quad)?;
    Ok((v * FRAC_1_PI).max(0.0))
}

/// Complex Ginibre mean density `Q(N, |z|²)/π`.
pub fn ginue_density(n: u32, z: ComplexPoint) -> Result<f64> {
    check_point(z)?;
    Ok(regularized_gamma_upper(n, z.norm_sqr())? * FRAC_1_PI)
}

/// Mean density of the non-real eigenvalues of real Ginibre matrices.
pub fn ginoe_complex_density(n: u32, z: ComplexPoint) -> Result<f64> {
    check_point(z)?;
    if n < 2 {
        return Err(Error::domain("n", "must be >= 2"));
    }
    let y = z.im.abs();
    if y == 0.0 {
        return Ok(0.0);
    }
    let s = std::f64::consts::SQRT_2 * y;
    Ok((2.0 / PI).sqrt() * y * erfcx(s)? * regularized_gamma_upper(n - 1, z.norm_sqr())?)
}

/// Mean density of the real eigenvalues of real Ginibre matrices.
pub fn ginoe_real_density(n: u32, x: f64, quad: &QuadSpec) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain("n", "must be >= 2"));
    }
    if !x.is_finite() {
        return Err(Error::domain("x", "must be finite"));
    }
    let x2 = x * x;
    let first = regularized_gamma_upper(n - 1, x2)?;
    let second = if x == 0.0 {
        0.0
    } else {
        let nf = n as f64;
        let c = (2.0 * nf - 2.0) * x.abs().ln() - x2 - ln_factorial(n - 2);
        let spec = QuadSpec {
            abs_tol: quad.abs_tol.min(1e-12),
            ..*quad
        };
        try_integrate(
            |t| {
                let ln_t = if n == 2 { 0.0 } else { (nf - 2.0) * t.ln() };
                Ok((ln_t + 0.5 * x2 * (1.0 - t * t) + c).exp())
            },
            0.0,
            1.0,
            &spec,
        )?
    };
    Ok((first + second) / (2.0 * PI).sqrt())
}

/// Limiting density near the real axis at `(1 − τ)N = δ²`, `x = √N·x̃`.
pub fn weak_nonreality_density(p: WeakNonRealityParams, y: f64, form: WeakForm) -> Result<f64> {
    weak_nonreality_density_with(p, y, form, &QuadSpec::default())
}

pub fn weak_nonreality_density_with(
    p: WeakNonRealityParams,
    y: f64,
    form: WeakForm,
    quad: &QuadSpec,
) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::domain("y", "must be finite"));
    }
    let dx2 = p.delta_x * p.delta_x;
    let y2 = y * y;
    let s = 2.0 * y2 + dx2;
    if s == 0.0 {
        return Ok(0.0);
    }
    match form {
        WeakForm::Integral => {
            let spec = QuadSpec {
                abs_tol: 0.0,
                rel_tol: quad.rel_tol.min(1e-13),
                ..*quad
            };
            let v = try_integrate_semi_infinite(
                |t| Ok(((1.0 - t * t) * s).exp() * (dx2 * t * t + 2.0 * y2)),
                1.0,
                1.0 / s.sqrt(),
                &spec,
            )?;
            Ok(2.0 * FRAC_1_PI * v)
        }
        WeakForm::Closed => {
            let rs = s.sqrt();
            let smooth = (2.0 * y2 / rs + dx2 / (2.0 * s * rs)) * erfcx(rs)? / PI.sqrt();
            Ok(FRAC_1_PI * dx2 / s + smooth)
        }
    }
}

/// Rate `a_τ(z̃) = 1 − 2τ·Re(z̃²) + τ²(2|z̃|² − 1)` of the limiting overlap law.
pub fn eigvec_rate(tau: f64, z_tilde: ComplexPoint) -> f64 {
    1.0 - 2.0 * tau * (z_tilde * z_tilde).re + tau * tau * (2.0 * z_tilde.norm_sqr() - 1.0)
}

/// Large-`N` joint density of the scaled eigenvalue `z̃ = z/√N` and the
/// scaled overlap `ũ = N|vᵀv|²`: `(a/2π)·exp(−a·ũ/2)`.
///
/// Integrated over `ũ` it gives the bulk density `1/π`.
pub fn limiting_eigvec_jpd(tau: f64, z_tilde: ComplexPoint, u_tilde: f64) -> Result<f64> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::domain("tau", format!("must lie in (0, 1], got {tau}")));
    }
    check_point(z_tilde)?;
    if !(u_tilde >= 0.0) {
        return Err(Error::domain("u_tilde", "must be >= 0"));
    }
    let a = eigvec_rate(tau, z_tilde);
    if !(a > 0.0) {
        return Err(Error::domain(
            "z_tilde",
            format!("overlap rate {a} is not positive at this point"),
        ));
    }
    Ok(0.5 * a * FRAC_1_PI * (-0.5 * a * u_tilde).exp())
}

/// Haar average over the complex unit sphere of `f(|vᵀv|²)`.
pub fn sphere_reduce<F>(mut f: F, n: u32, quad: &QuadSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if n < 2 {
        return Err(Error::domain("n", "sphere reduction needs n >= 2"));
    }
    let nf = n as f64;
    let v = try_integrate(
        |s| {
            let w = if n == 2 { 1.0 } else { s.powi(n as i32 - 2) };
            Ok(w * f(1.0 - s * s)?)
        },
        0.0,
        1.0,
        quad,
    )?;
    Ok((nf - 1.0) * v)
}

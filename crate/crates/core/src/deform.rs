//! Densities of the additively deformed complex Ginibre ensemble `X = G + A`.

use std::f64::consts::{FRAC_1_PI, PI};

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::TOL;
use crate::error::{Error, Result};
use crate::interp::ComplexPoint;
use crate::linalg::{cdot, eigenvalues, frobenius, norm_sqr, CMat, SquareMatrix};
use crate::quad::{GaussLegendre, QuadSpec};
use crate::specfn::{ln_factorial, ln_poisson_term, ln_regularized_gamma_upper, regularized_gamma_lower};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The deterministic part `A` of `X = G + A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Deformation {
    General { a: SquareMatrix },
    /// `A = a·r⊗l*` with `l*r = 1`.
    RankOne {
        a: Complex64,
        r: Vec<Complex64>,
        l: Vec<Complex64>,
    },
    /// `A = diag(eigs)`.
    NormalDiag { eigs: Vec<Complex64> },
}

impl Deformation {
    pub fn rank_one(a: Complex64, r: Vec<Complex64>, l: Vec<Complex64>) -> Result<Self> {
        check_rank_one(&r, &l)?;
        Ok(Deformation::RankOne { a, r, l })
    }

    /// Normal rank-one deformation `a·e₁⊗e₁*` of size `n`.
    pub fn rank_one_normal(a: Complex64, n: usize) -> Self {
        let mut e1 = vec![ZERO; n];
        e1[0] = Complex64::new(1.0, 0.0);
        Deformation::RankOne {
            a,
            r: e1.clone(),
            l: e1,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Deformation::General { a } => a.n,
            Deformation::RankOne { r, .. } => r.len(),
            Deformation::NormalDiag { eigs } => eigs.len(),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        match self {
            Deformation::General { a } => a.get(i, j),
            Deformation::RankOne { a, r, l } => a * r[i] * l[j].conj(),
            Deformation::NormalDiag { eigs } => {
                if i == j {
                    eigs[i]
                } else {
                    ZERO
                }
            }
        }
    }

    pub fn to_mat(&self) -> CMat {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| self.entry(i, j))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Deformation::General { a } => {
                if a.data.len() != a.n * a.n {
                    return Err(Error::Dimension {
                        expected: a.n * a.n,
                        got: a.data.len(),
                    });
                }
                Ok(())
            }
            Deformation::RankOne { r, l, .. } => check_rank_one(r, l),
            Deformation::NormalDiag { .. } => Ok(()),
        }
    }
}

fn check_rank_one(r: &[Complex64], l: &[Complex64]) -> Result<()> {
    if r.len() != l.len() {
        return Err(Error::Dimension {
            expected: r.len(),
            got: l.len(),
        });
    }
    let lr = cdot(l, r);
    if (lr - 1.0).norm() > TOL.biorthogonality {
        return Err(Error::Normalization(format!(
            "rank-one deformation needs l*r = 1, got {lr}"
        )));
    }
    Ok(())
}

/// A complex vector with `v*v = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitVector(Vec<Complex64>);

impl UnitVector {
    pub fn new(v: Vec<Complex64>) -> Result<Self> {
        let nn = norm_sqr(&v);
        if v.is_empty() || (nn - 1.0).abs() > TOL.unit_norm {
            return Err(Error::Normalization(format!("v*v = {nn}, expected 1")));
        }
        Ok(UnitVector(v))
    }

    /// Rescales a nonzero vector to unit length.
    pub fn normalized(mut v: Vec<Complex64>) -> Result<Self> {
        let nn = norm_sqr(&v);
        if !(nn > 0.0 && nn.is_finite()) {
            return Err(Error::Normalization("cannot normalize a zero vector".into()));
        }
        let s = 1.0 / nn.sqrt();
        v.iter_mut().for_each(|x| *x *= s);
        Ok(UnitVector(v))
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_dims(d: &Deformation, v: &UnitVector) -> Result<()> {
    d.validate()?;
    if d.dim() != v.len() {
        return Err(Error::Dimension {
            expected: d.dim(),
            got: v.len(),
        });
    }
    Ok(())
}

/// `T_A(v) = A_z*·P·A_z·P` with `A_z = A − z` and `P = 1 − v⊗v*`.
pub fn build_ta(d: &Deformation, z: ComplexPoint, v: &UnitVector) -> Result<CMat> {
    check_dims(d, v)?;
    let n = d.dim();
    let vs = v.as_slice();
    let az = Mat::from_fn(n, n, |i, j| d.entry(i, j) - if i == j { z } else { ZERO });
    let p = Mat::from_fn(n, n, |i, j| {
        let id = if i == j { Complex64::new(1.0, 0.0) } else { ZERO };
        id - vs[i] * vs[j].conj()
    });
    let pap = &p * &az * &p;
    Ok(az.adjoint() * pap)
}

/// Elementary symmetric polynomials `e_0..=e_m` of the given values.
fn elementary_symmetric(t: &[Complex64]) -> Vec<Complex64> {
    let mut e = vec![ZERO; t.len() + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for (i, ti) in t.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            let prev = e[k - 1];
            e[k] += prev * ti;
        }
    }
    e
}

/// Joint density of an eigenvalue `z` and its right eigenvector `v`.
///
/// The `R`-integral is done exactly: after dropping the zero mode of
/// `T_A(v)` it equals `Σ_k e_k(t)·(N−1−k)!/(N−1)!`.
pub fn jpd_additive(d: &Deformation, n: usize, z: ComplexPoint, v: &UnitVector) -> Result<f64> {
    if n != d.dim() {
        return Err(Error::Dimension {
            expected: d.dim(),
            got: n,
        });
    }
    let t = build_ta(d, z, v)?;
    let tnorm = frobenius(t.as_ref());
    let nonzero: Vec<Complex64> = if n == 2 {
        let det = t[(0, 0)] * t[(1, 1)] - t[(0, 1)] * t[(1, 0)];
        if det.norm() > TOL.zero_mode * tnorm * tnorm.max(1.0) {
            return Err(Error::Eigensolver(format!(
                "T_A(v) has no zero mode (det = {det:e})"
            )));
        }
        vec![t[(0, 0)] + t[(1, 1)]]
    } else {
        let mut vals = eigenvalues(t.as_ref())?;
        let (imin, tmin) = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, x)| (i, x.norm()))
            .ok_or_else(|| Error::Eigensolver("empty spectrum".into()))?;
        if tmin > TOL.zero_mode * tnorm.max(f64::MIN_POSITIVE) && tnorm > 0.0 {
            return Err(Error::Eigensolver(format!(
                "zero mode of T_A(v) not found: smallest |t| = {tmin:e}, |T| = {tnorm:e}"
            )));
        }
        vals.swap_remove(imin);
        vals
    };
    let e = elementary_symmetric(&nonzero);
    let mut weight = 1.0;
    let mut sum = ZERO;
    for (k, ek) in e.iter().enumerate() {
        if k > 0 {
            weight /= (n - k) as f64;
        }
        sum += ek * weight;
    }
    if sum.im.abs() > TOL.imag_part * sum.norm().max(1.0) {
        return Err(Error::Eigensolver(format!(
            "R-integral has an imaginary part {:e}",
            sum.im
        )));
    }
    let azv: Vec<Complex64> = {
        let vs = v.as_slice();
        (0..n)
            .map(|i| {
                (0..n).map(|j| d.entry(i, j) * vs[j]).sum::<Complex64>() - z * vs[i]
            })
            .collect()
    };
    Ok(((-norm_sqr(&azv)).exp() * sum.re * FRAC_1_PI).max(0.0))
}

fn lexp(l: f64) -> f64 {
    if l == f64::NEG_INFINITY {
        0.0
    } else {
        l.exp()
    }
}

fn ln_q(n: u32, r2: f64) -> Result<f64> {
    ln_regularized_gamma_upper(n, r2)
}

/// Joint density for `A = a·r⊗l*` in the direct closed form.
pub fn rank_one_jpd(
    a: Complex64,
    r: &[Complex64],
    l: &[Complex64],
    n: usize,
    z: ComplexPoint,
    v: &UnitVector,
) -> Result<f64> {
    check_rank_one(r, l)?;
    if r.len() != n || v.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: if r.len() != n { r.len() } else { v.len() },
        });
    }
    if n < 2 {
        return Err(Error::domain("n", "must be >= 2"));
    }
    let vs = v.as_slice();
    let lv = cdot(l, vs);
    let vr = cdot(vs, r);
    let rv = vr.conj();
    let vl = lv.conj();
    let rr = norm_sqr(r);
    let ll = norm_sqr(l);
    let a2 = a.norm_sqr();
    let r2 = z.norm_sqr();
    let azc = a * z.conj();
    let expo = -a2 * rr * lv.norm_sqr() + 2.0 * (azc * lv * vr).re;
    let rpr = rr - rv.norm_sqr();
    let lpl = ll - lv.norm_sqr();
    let b1 = a2 * rpr * lpl - 2.0 * (azc * (1.0 - lv * vr)).re;
    let nf = n as f64;
    let nn = n as u32;
    let mut total = lexp(expo + ln_q(nn, r2)?) + b1 * lexp(expo + ln_q(nn - 1, r2)?) / (nf - 1.0);
    if n > 2 {
        let b2 = rpr * lpl - (1.0 - rv * vl).norm_sqr();
        total -= a2 * r2 * b2 * lexp(expo + ln_q(nn - 2, r2)?) / ((nf - 1.0) * (nf - 2.0));
    }
    Ok((total * FRAC_1_PI).max(0.0))
}

fn check_q(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain("q", format!("must lie in [0, 1], got {q}")));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<u32> {
    if n < 2 {
        return Err(Error::domain("n", "must be >= 2"));
    }
    u32::try_from(n).map_err(|_| Error::domain("n", "too large"))
}

/// `δ = |a|² − (a·z̄ + ā·z)`.
pub fn rank_one_delta(a: Complex64, z: ComplexPoint) -> f64 {
    a.norm_sqr() - 2.0 * (a * z.conj()).re
}

/// Joint density for the normal deformation `A = a·r⊗r*`, `|r| = 1`, as a
/// function of `q = |r*v|²`.
pub fn rank_one_normal_jpd(a: Complex64, n: usize, z: ComplexPoint, q: f64) -> Result<f64> {
    check_q(q)?;
    let nn = check_n(n)?;
    let r2 = z.norm_sqr();
    let delta = rank_one_delta(a, z);
    let expo = -q * delta;
    let bracket = (1.0 - q) * (a.norm_sqr() * (1.0 - q) - 2.0 * (a * z.conj()).re);
    let total = lexp(expo + ln_q(nn, r2)?) + bracket * lexp(expo + ln_q(nn - 1, r2)?) / (n as f64 - 1.0);
    Ok((total * FRAC_1_PI).max(0.0))
}

/// Joint density of `z` and `q`: the Haar law `(N−1)(1−q)^{N−2}` of `q`
/// times [`rank_one_normal_jpd`].
pub fn rank_one_normal_q_jpd(a: Complex64, n: usize, z: ComplexPoint, q: f64) -> Result<f64> {
    let j = rank_one_normal_jpd(a, n, z, q)?;
    Ok((n as f64 - 1.0) * (1.0 - q).powi(n as i32 - 2) * j)
}

/// `ln I^{(k)}(N, δ)` with `I^{(k)}(N, δ) = ∫₀¹ e^{−qδ}(1−q)^{N+k−2} dq`.
pub fn ln_i_k(n: u32, k: u32, delta: f64) -> Result<f64> {
    if n + k < 2 {
        return Err(Error::domain("n", "I^(k) needs n + k >= 2"));
    }
    if !delta.is_finite() {
        return Err(Error::domain("delta", "must be finite"));
    }
    let m = n + k - 2;
    let m1 = m as f64 + 1.0;
    if delta == 0.0 {
        return Ok(-m1.ln());
    }
    if delta > 0.0 {
        // Poisson mixture of Beta moments
        let peak = delta.floor().min(u32::MAX as f64 - 1.0) as u32;
        let ln_peak = ln_poisson_term(peak, delta);
        let mut sum = 1.0 / (m1 + peak as f64);
        let mut p = 1.0;
        let mut j = peak;
        while j > 0 {
            p *= j as f64 / delta;
            j -= 1;
            let t = p / (m1 + j as f64);
            sum += t;
            if t < 1e-17 * sum {
                break;
            }
        }
        p = 1.0;
        j = peak;
        loop {
            j += 1;
            p *= delta / j as f64;
            let t = p / (m1 + j as f64);
            sum += t;
            if t < 1e-17 * sum {
                break;
            }
        }
        return Ok(ln_peak + sum.ln());
    }
    let d = -delta;
    if d <= m1 {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut j = 0.0;
        loop {
            j += 1.0;
            term *= d / (m1 + j);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        return Ok(sum.ln() - m1.ln());
    }
    let p = regularized_gamma_lower(m + 1, d)?;
    Ok(d + ln_factorial(m) - m1 * d.ln() + p.ln())
}

pub fn i_k(n: u32, k: u32, delta: f64) -> Result<f64> {
    let l = ln_i_k(n, k, delta)?;
    if l > 709.0 {
        return Err(Error::Overflow(format!(
            "I^({k})({n}, {delta}) = exp({l}) exceeds double range; use ln_i_k"
        )));
    }
    Ok(l.exp())
}

/// Mean eigenvalue density for `A = a·r⊗r*`, integrating to `N`.
pub fn rank_one_normal_mean_density(a: Complex64, n: usize, z: ComplexPoint) -> Result<f64> {
    let nn = check_n(n)?;
    if !(z.re.is_finite() && z.im.is_finite() && a.re.is_finite() && a.im.is_finite()) {
        return Err(Error::domain("z", "must be finite"));
    }
    let r2 = z.norm_sqr();
    let delta = rank_one_delta(a, z);
    let a2 = a.norm_sqr();
    let lq0 = ln_q(nn, r2)?;
    let lq1 = ln_q(nn - 1, r2)?;
    let t0 = lexp((n as f64 - 1.0).ln() + lq0 + ln_i_k(nn, 0, delta)?);
    let t2 = a2 * lexp(lq1 + ln_i_k(nn, 2, delta)?);
    let t1 = (delta - a2) * lexp(lq1 + ln_i_k(nn, 1, delta)?);
    Ok(((t0 + t1 + t2) * FRAC_1_PI).max(0.0))
}

/// Finite-difference scheme for the Laplacian in [`hikami_pnini_density`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    FivePoint,
    Richardson,
}

/// Mean density for a normal deformation with distinct eigenvalues `a_i`,
/// from the `p`-integral representation differentiated numerically.
///
/// The `p`-integral uses one fixed composite Gauss–Legendre rule for all
/// stencil points so that its error varies smoothly with `z`; `quad.order`
/// sets the nodes per panel.
pub fn hikami_pnini_density(
    eigs: &[Complex64],
    n: usize,
    z: ComplexPoint,
    h: f64,
    stencil: Stencil,
    quad: &QuadSpec,
) -> Result<f64> {
    if n != eigs.len() {
        return Err(Error::Dimension {
            expected: eigs.len(),
            got: n,
        });
    }
    if n == 0 {
        return Err(Error::domain("n", "must be >= 1"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain("h", "finite-difference step must be positive"));
    }
    for i in 0..n {
        for k in i + 1..n {
            if (eigs[i] - eigs[k]).norm() <= 100.0 * h {
                return Err(Error::Singular(format!(
                    "a_{i} and a_{k} are closer than 100 h"
                )));
            }
        }
    }
    let rule = GaussLegendre::cached(quad.order.clamp(8, 64));
    let lap = |h: f64| -> Result<f64> {
        let f = |dx: f64, dy: f64| hp_potential(eigs, z + Complex64::new(dx, dy), rule);
        let c = f(0.0, 0.0)?;
        Ok((f(h, 0.0)? + f(-h, 0.0)? + f(0.0, h)? + f(0.0, -h)? - 4.0 * c) / (h * h))
    };
    let laplacian = match stencil {
        Stencil::FivePoint => lap(h)?,
        Stencil::Richardson => (4.0 * lap(0.5 * h)? - lap(h)?) / 3.0,
    };
    Ok(-0.25 * laplacian * FRAC_1_PI)
}

const HP_PANELS: usize = 8;

/// `∫₀¹ (S(p) − N)/p dp` with
/// `S(p) = Σ_i e^{−p d_i} Π_{k≠i}(1 − p d_i/(d_i − d_k))`, `d_i = |z − a_i|²`.
fn hp_potential(eigs: &[Complex64], z: ComplexPoint, rule: &GaussLegendre) -> Result<f64> {
    let d: Vec<f64> = eigs.iter().map(|a| (z - a).norm_sqr()).collect();
    let scale = d.iter().fold(0.0_f64, |m, x| m.max(*x)).max(1.0);
    let n = d.len();
    let mut ratio = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            let gap = d[i] - d[k];
            if gap.abs() <= TOL.degeneracy * scale {
                return Err(Error::Singular(format!(
                    "|z - a_{i}|^2 = |z - a_{k}|^2 at z = {z}; perturb z"
                )));
            }
            ratio[i * n + k] = d[i] / gap;
        }
    }
    let nf = n as f64;
    let width = 1.0 / HP_PANELS as f64;
    let mut total = 0.0;
    for panel in 0..HP_PANELS {
        let mid = (panel as f64 + 0.5) * width;
        let mut s = 0.0;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let p = mid + 0.5 * width * x;
            let mut sp = 0.0;
            for i in 0..n {
                let mut prod = (-p * d[i]).exp();
                for k in 0..n {
                    if k != i {
                        prod *= 1.0 - p * ratio[i * n + k];
                    }
                }
                sp += prod;
            }
            s += w * (sp - nf) / p;
        }
        total += 0.5 * width * s;
    }
    Ok(total)
}

/// Large-deviation parameters at scaled coordinates `a = √N·α`, `z = √N·w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierParams {
    pub alpha: Complex64,
    pub w: Complex64,
    pub delta_cap: f64,
}

impl OutlierParams {
    pub fn new(alpha: Complex64, w: Complex64) -> Self {
        OutlierParams {
            alpha,
            w,
            delta_cap: rank_one_delta(alpha, w),
        }
    }
}

/// Rate `ℱ(w) = |w−α|² + ln|1 − |w−α|²/|w|²|` outside the unit disc.
pub fn outlier_rate(p: OutlierParams) -> Result<f64> {
    let w2 = p.w.norm_sqr();
    if !(w2 > 1.0) {
        return Err(Error::domain("w", format!("rate defined only for |w| > 1, got |w| = {}", w2.sqrt())));
    }
    let s = (p.w - p.alpha).norm_sqr();
    let arg = (1.0 - s / w2).abs();
    if arg == 0.0 {
        return Err(Error::Singular("|w - alpha| = |w|: logarithmic singularity".into()));
    }
    Ok(s + arg.ln())
}

/// Leading large-`N` density of [`rank_one_normal_mean_density`] at
/// `z = √N·w`, `a = √N·α`, valid for `|w| > 1` and `Δ < −1`.
pub fn outlier_ld_density(alpha: Complex64, n: usize, w: Complex64) -> Result<f64> {
    let p = OutlierParams::new(alpha, w);
    if !(p.delta_cap < -1.0) {
        return Err(Error::domain("w", format!("needs Delta < -1, got {}", p.delta_cap)));
    }
    let f = outlier_rate(p)?;
    let w2 = w.norm_sqr();
    let dd = p.delta_cap.abs();
    let pref = dd / w2 - alpha.norm_sqr() * (1.0 - 1.0 / dd) / ((w2 - 1.0) * w2);
    Ok(FRAC_1_PI * (-(n as f64) * f).exp() * pref)
}

/// `σ = |α|²/(|α|² − 1)`, the outlier variance scale.
pub fn outlier_sigma(alpha: Complex64) -> Result<f64> {
    let a2 = alpha.norm_sqr();
    if !(a2 > 1.0) {
        return Err(Error::domain("alpha", format!("needs |alpha| > 1, got {}", a2.sqrt())));
    }
    Ok(a2 / (a2 - 1.0))
}

/// Gaussian outlier profile `(1/πσ)·exp(−(N/σ)|w − α|²)`.
pub fn outlier_gaussian_profile(alpha: Complex64, n: usize, w: Complex64) -> Result<f64> {
    let sigma = outlier_sigma(alpha)?;
    Ok((-(n as f64) / sigma * (w - alpha).norm_sqr()).exp() / (PI * sigma))
}

/// Typical outlier overlap `q* = 1 − |α|^{−2}`.
pub fn overlap_typical(alpha: Complex64) -> Result<f64> {
    outlier_sigma(alpha)?;
    Ok(1.0 - 1.0 / alpha.norm_sqr())
}

/// Overlap rate `𝒢(q) = |α|²(1−q) − ln(|α|²(1−q)) − 1`, minimal (zero) at `q*`.
pub fn overlap_ld_rate(alpha: Complex64, q: f64) -> Result<f64> {
    outlier_sigma(alpha)?;
    if !(0.0..1.0).contains(&q) {
        return Err(Error::domain("q", format!("must lie in [0, 1), got {q}")));
    }
    let x = alpha.norm_sqr() * (1.0 - q);
    if !(x > 0.0) {
        return Err(Error::domain("q", "|alpha|^2 (1 - q) must be positive"));
    }
    Ok(x - x.ln() - 1.0)
}

/// Leading large-`N` joint density of `z = √N·α` and the overlap `q`.
pub fn overlap_ld_density(alpha: Complex64, n: usize, q: f64) -> Result<f64> {
    let g = overlap_ld_rate(alpha, q)?;
    let nf = n as f64;
    let r = q / (1.0 - q);
    Ok((nf / (2.0 * PI)).sqrt() * r * r / (PI * (alpha.norm_sqr() - 1.0)) * (-nf * g).exp())
}

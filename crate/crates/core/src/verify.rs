//! Histogram-versus-model comparisons and numerical checks of the integral
//! identities and asymptotics behind the closed-form densities.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_PI, PI};

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::deform::{ln_i_k, rank_one_normal_mean_density};
use crate::ensemble::{haar_vector, matrix_rng, Axis, GridKind, HistogramGrid};
use crate::error::{Error, Result};
use crate::interp::{
    eigvec_rate, ginoe_complex_density, ginoe_real_density, ginue_density, mean_density_interpolating,
    sphere_reduce, weak_nonreality_density_with, InterpParams, WeakForm, WeakNonRealityParams,
};
use crate::linalg;
use crate::quad::{try_integrate_disc, try_integrate_rect, try_integrate_semi_infinite, QuadSpec};
use crate::specfn::{ln_regularized_gamma_upper, log_gamma, regularized_gamma_lower};

pub const SCHEMA: u32 = 1;
const RECT_ORDER: usize = 8;
const MC_CHUNK: u64 = 1 << 14;

/// Analytic counting densities that a histogram can be compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DensityModel {
    Ginue { n: u32 },
    Interpolating { tau: f64, n: u32 },
    GinoeComplex { n: u32 },
    /// Real eigenvalues of real Ginibre matrices, for the real-axis detector.
    GinoeReal { n: u32 },
    /// Weak non-reality limit in `(x̃, y)`; needs a strip grid.
    WeakNonReality { delta: f64, form: WeakForm },
    RankOneNormal { a: Complex64, n: u32 },
    /// Large-`N` law of `ũ`; needs a disc-overlap grid.
    LimitingEigvec { tau: f64 },
    /// `(N−1)(1−q)^{N−2}` on a line histogram of `q`.
    QLaw { n: u32 },
}

impl DensityModel {
    /// Point density in raw eigenvalue coordinates, for plane and strip grids.
    pub fn point_density(&self, z: Complex64, n_grid: usize, quad: &QuadSpec) -> Result<f64> {
        match *self {
            DensityModel::Ginue { n } => ginue_density(n, z),
            DensityModel::Interpolating { tau, n } => {
                mean_density_interpolating(InterpParams::new(tau, n)?, z, quad)
            }
            DensityModel::GinoeComplex { n } => ginoe_complex_density(n, z),
            DensityModel::RankOneNormal { a, n } => rank_one_normal_mean_density(a, n as usize, z),
            DensityModel::WeakNonReality { delta, form } => {
                let xt = z.re / (n_grid as f64).sqrt();
                weak_nonreality_density_with(WeakNonRealityParams::new(delta, xt)?, z.im, form, quad)
            }
            _ => Err(Error::domain("model", "model has no point density in the plane")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub chi2_min: f64,
    pub chi2_max: f64,
    pub max_abs_z: f64,
    /// Bins expecting fewer counts go to the tail bin.
    pub min_expected: f64,
    /// Rescale the model to the observed total before comparing.
    pub shape_normalized: bool,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            chi2_min: 0.5,
            chi2_max: 1.5,
            max_abs_z: 5.0,
            min_expected: 20.0,
            shape_normalized: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// Machine-readable outcome of any check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub check: String,
    pub params: Value,
    pub statistics: Value,
    pub verdict: Verdict,
    pub thresholds: Value,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub index: usize,
    pub center: Vec<f64>,
    pub observed: u64,
    pub expected: f64,
    /// Present only for bins entering the statistic.
    pub z_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub model: DensityModel,
    pub grid: GridKind,
    pub n: usize,
    pub n_matrices: u64,
    pub bins: Vec<BinRow>,
    pub tail_observed: u64,
    pub tail_expected: f64,
    pub chi2: f64,
    pub dof: usize,
    pub chi2_per_dof: f64,
    pub max_abs_z: f64,
    pub total_mass_ratio: f64,
    pub n_effective_bins: usize,
    pub thresholds: Thresholds,
    pub verdict: Verdict,
}

impl ComparisonReport {
    pub fn to_report(&self, check: &str) -> Report {
        Report {
            schema: SCHEMA,
            check: check.to_string(),
            params: json!({
                "model": self.model,
                "grid": self.grid,
                "n": self.n,
                "n_matrices": self.n_matrices,
            }),
            statistics: json!({
                "chi2": self.chi2,
                "dof": self.dof,
                "chi2_per_dof": self.chi2_per_dof,
                "max_abs_z": self.max_abs_z,
                "total_mass_ratio": self.total_mass_ratio,
                "n_effective_bins": self.n_effective_bins,
                "tail_observed": self.tail_observed,
                "tail_expected": self.tail_expected,
                "bins": self.bins,
            }),
            verdict: self.verdict,
            thresholds: json!(self.thresholds),
        }
    }
}

fn bin_centers(kind: &GridKind, i: usize) -> Vec<f64> {
    match kind {
        GridKind::Plane { x, y } => vec![x.center(i / y.bins), y.center(i % y.bins)],
        GridKind::ModulusOverlap { r, u } => vec![r.center(i / u.bins), u.center(i % u.bins)],
        GridKind::Strip { y: a, .. }
        | GridKind::DiscOverlap { u: a, .. }
        | GridKind::ProbeOverlap { q: a, .. }
        | GridKind::Line { axis: a, .. } => vec![a.center(i)],
        GridKind::RealAxis { .. } => vec![0.0],
    }
}

fn incompatible(model: &DensityModel, grid: &GridKind) -> Error {
    Error::domain(
        "model",
        format!("model {model:?} cannot be compared with grid {grid:?}"),
    )
}

/// Expected count in bin `i` per matrix.
fn bin_expected_per_matrix(grid: &HistogramGrid, model: &DensityModel, i: usize, quad: &QuadSpec) -> Result<f64> {
    let n = grid.n;
    let point = |x: f64, y: f64| model.point_density(Complex64::new(x, y), n, quad);
    match (&grid.kind, model) {
        (GridKind::Plane { x, y }, m) if m.is_planar() => {
            let (x0, x1) = x.edges(i / y.bins);
            let (y0, y1) = y.edges(i % y.bins);
            try_integrate_rect(point, (x0, x1), (y0, y1), RECT_ORDER, 1)
        }
        (
            GridKind::Strip {
                x0,
                half_width,
                scaled_x,
                y,
            },
            m,
        ) if m.is_planar() => {
            let s = if *scaled_x { (n as f64).sqrt() } else { 1.0 };
            let (y0, y1) = y.edges(i);
            let (xa, xb) = ((x0 - half_width) * s, (x0 + half_width) * s);
            try_integrate_rect(point, (xa, xb), (y0, y1), RECT_ORDER, 2)
        }
        (GridKind::RealAxis { .. }, DensityModel::GinoeReal { n: nm }) => {
            let spec = QuadSpec {
                abs_tol: quad.abs_tol,
                ..*quad
            };
            let half = try_integrate_semi_infinite(
                |x| ginoe_real_density(*nm, x, quad),
                0.0,
                (*nm as f64).sqrt(),
                &spec,
            )?;
            Ok(2.0 * half)
        }
        (GridKind::DiscOverlap { center, radius, u }, DensityModel::LimitingEigvec { tau }) => {
            let (u0, u1) = u.edges(i);
            let tau = *tau;
            let mass = try_integrate_disc(
                |x, y| {
                    let a = eigvec_rate(tau, Complex64::new(x, y));
                    if !(a > 0.0) {
                        return Err(Error::domain("z_tilde", format!("overlap rate {a} is not positive")));
                    }
                    Ok(FRAC_1_PI * ((-0.5 * a * u0).exp() - (-0.5 * a * u1).exp()))
                },
                (center.re, center.im),
                *radius,
                &[],
                quad,
            )?;
            Ok(n as f64 * mass)
        }
        (GridKind::Line { axis, .. }, DensityModel::QLaw { n: nm }) => {
            if *nm < 2 {
                return Err(Error::domain("n", "q law needs n >= 2"));
            }
            let (q0, q1) = axis.edges(i);
            let cdf_c = |q: f64| (1.0 - q.clamp(0.0, 1.0)).powi(*nm as i32 - 1);
            Ok(cdf_c(q0) - cdf_c(q1))
        }
        (g, m) => Err(incompatible(m, g)),
    }
}

impl DensityModel {
    fn is_planar(&self) -> bool {
        matches!(
            self,
            DensityModel::Ginue { .. }
                | DensityModel::Interpolating { .. }
                | DensityModel::GinoeComplex { .. }
                | DensityModel::RankOneNormal { .. }
                | DensityModel::WeakNonReality { .. }
        )
    }
}

/// Expected counts of every bin (`n_matrices × ∫_bin model`).
pub fn expected_counts(grid: &HistogramGrid, model: &DensityModel, quad: &QuadSpec) -> Result<Vec<f64>> {
    if grid.n_matrices == 0 {
        return Err(Error::EmptyGrid);
    }
    let nm = grid.n_matrices as f64;
    (0..grid.counts.len())
        .into_par_iter()
        .map(|i| {
            bin_expected_per_matrix(grid, model, i, quad)
                .map(|e| e * nm)
                .map_err(|e| match e {
                    Error::Domain { param: "model", .. } => e,
                    other => Error::ModelBin {
                        bin: i,
                        source: Box::new(other),
                    },
                })
        })
        .collect()
}

/// Poisson comparison of a filled histogram with a model.
pub fn compare_density(
    grid: &HistogramGrid,
    model: &DensityModel,
    quad: &QuadSpec,
    thresholds: &Thresholds,
) -> Result<ComparisonReport> {
    let mut expected = expected_counts(grid, model, quad)?;
    let obs_total = grid.total() as f64;
    let exp_total: f64 = expected.iter().sum();
    if thresholds.shape_normalized && exp_total > 0.0 {
        let s = obs_total / exp_total;
        expected.iter_mut().for_each(|e| *e *= s);
    }
    let mut bins = Vec::with_capacity(expected.len());
    let (mut chi2, mut max_abs_z, mut eff) = (0.0, 0.0f64, 0usize);
    let (mut tail_obs, mut tail_exp) = (0u64, 0.0);
    for (i, (&o, &e)) in grid.counts.iter().zip(&expected).enumerate() {
        let z = if e >= thresholds.min_expected {
            let z = (o as f64 - e) / e.sqrt();
            chi2 += z * z;
            max_abs_z = max_abs_z.max(z.abs());
            eff += 1;
            Some(z)
        } else {
            tail_obs += o;
            tail_exp += e;
            None
        };
        bins.push(BinRow {
            index: i,
            center: bin_centers(&grid.kind, i),
            observed: o,
            expected: e,
            z_score: z,
        });
    }
    let mut dof = eff;
    if tail_exp >= thresholds.min_expected {
        let z = (tail_obs as f64 - tail_exp) / tail_exp.sqrt();
        chi2 += z * z;
        max_abs_z = max_abs_z.max(z.abs());
        dof += 1;
    }
    if thresholds.shape_normalized {
        dof = dof.saturating_sub(1);
    }
    let chi2_per_dof = if dof > 0 { chi2 / dof as f64 } else { f64::NAN };
    let ok = dof > 0
        && chi2_per_dof >= thresholds.chi2_min
        && chi2_per_dof <= thresholds.chi2_max
        && max_abs_z <= thresholds.max_abs_z;
    Ok(ComparisonReport {
        model: model.clone(),
        grid: grid.kind.clone(),
        n: grid.n,
        n_matrices: grid.n_matrices,
        bins,
        tail_observed: tail_obs,
        tail_expected: tail_exp,
        chi2,
        dof,
        chi2_per_dof,
        max_abs_z,
        total_mass_ratio: obs_total / exp_total,
        n_effective_bins: eff,
        thresholds: *thresholds,
        verdict: Verdict::from_bool(ok),
    })
}

/// L1 distance between the empirical slice density of a strip histogram and
/// the bin-averaged model, `Σ |obs − exp| / (n_matrices · strip width)`.
pub fn l1_distance(grid: &HistogramGrid, model: &DensityModel, quad: &QuadSpec) -> Result<f64> {
    let GridKind::Strip {
        half_width, scaled_x, ..
    } = &grid.kind
    else {
        return Err(incompatible(model, &grid.kind));
    };
    let expected = expected_counts(grid, model, quad)?;
    let width = 2.0 * half_width * if *scaled_x { (grid.n as f64).sqrt() } else { 1.0 };
    let s: f64 = grid
        .counts
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| (o as f64 - e).abs())
        .sum();
    Ok(s / (grid.n_matrices as f64 * width))
}

fn chunked_mc<T, F>(samples: u64, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    let chunks = samples.div_ceil(MC_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = matrix_rng(seed, 0, k);
            let m = MC_CHUNK.min(samples - k * MC_CHUNK);
            f(&mut rng, m)
        })
        .collect()
}

/// Sample mean and its standard error from chunk-wise `(Σx, Σx², count)`.
fn mean_se(parts: &[(f64, f64, u64)]) -> (f64, f64) {
    let (mut s, mut s2, mut m) = (0.0, 0.0, 0u64);
    for &(a, b, c) in parts {
        s += a;
        s2 += b;
        m += c;
    }
    let mf = m as f64;
    let mean = s / mf;
    let var = ((s2 / mf - mean * mean) * mf / (mf - 1.0).max(1.0)).max(0.0);
    (mean, (var / mf).sqrt())
}

fn z_of(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McAgreement {
    pub label: String,
    pub n: u32,
    pub samples: u64,
    pub seed: u64,
    pub mc_estimate: f64,
    pub mc_std_error: f64,
    pub reference: f64,
    pub z_score: f64,
    pub max_abs_z: f64,
    pub verdict: Verdict,
}

impl McAgreement {
    fn new(label: String, n: u32, samples: u64, seed: u64, (mc, se): (f64, f64), reference: f64, max_abs_z: f64) -> Self {
        let z = z_of(mc - reference, se.max(1e-12 * reference.abs()));
        McAgreement {
            label,
            n,
            samples,
            seed,
            mc_estimate: mc,
            mc_std_error: se,
            reference,
            z_score: z,
            max_abs_z,
            verdict: Verdict::from_bool(z.abs() <= max_abs_z),
        }
    }

    pub fn to_report(&self, check: &str) -> Report {
        Report {
            schema: SCHEMA,
            check: check.to_string(),
            params: json!({ "label": self.label, "n": self.n, "samples": self.samples, "seed": self.seed }),
            statistics: json!({
                "mc_estimate": self.mc_estimate,
                "mc_std_error": self.mc_std_error,
                "reference": self.reference,
                "z_score": self.z_score,
            }),
            verdict: self.verdict,
            thresholds: json!({ "max_abs_z": self.max_abs_z }),
        }
    }
}

/// Haar average of `f(|vᵀv|²)` by Monte Carlo against [`sphere_reduce`].
pub fn check_sphere_lemma<F>(label: &str, f: F, n: u32, samples: u64, seed: u64) -> Result<McAgreement>
where
    F: Fn(f64) -> f64 + Sync,
{
    if n < 2 {
        return Err(Error::domain("n", "sphere lemma needs n >= 2"));
    }
    if samples < 2 {
        return Err(Error::domain("samples", "need at least 2 samples"));
    }
    let quad = sphere_reduce(|u| Ok(f(u)), n, &QuadSpec::default())?;
    let parts = chunked_mc(samples, seed, |rng, m| {
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..m {
            let v = haar_vector(rng, n as usize);
            let t: Complex64 = v.iter().map(|c| c * c).sum();
            let x = f(t.norm_sqr());
            s += x;
            s2 += x * x;
        }
        (s, s2, m)
    });
    Ok(McAgreement::new(label.to_string(), n, samples, seed, mean_se(&parts), quad, 4.0))
}

/// Test functions of the sphere lemma selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "f", rename_all = "snake_case")]
pub enum SphereFn {
    One,
    U,
    /// `exp(c·u)`.
    Exp { c: f64 },
}

impl SphereFn {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            SphereFn::One => 1.0,
            SphereFn::U => u,
            SphereFn::Exp { c } => (c * u).exp(),
        }
    }

    /// Accepts `1`, `u` or `exp:<c>`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "one" => Ok(SphereFn::One),
            "u" => Ok(SphereFn::U),
            t => t
                .strip_prefix("exp:")
                .and_then(|c| c.parse::<f64>().ok())
                .map(|c| SphereFn::Exp { c })
                .ok_or_else(|| Error::domain("f", format!("unknown test function `{s}` (use 1, u or exp:<c>)"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            SphereFn::One => "1".into(),
            SphereFn::U => "u".into(),
            SphereFn::Exp { c } => format!("exp:{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QLawReport {
    pub comparison: ComparisonReport,
    pub mean_q: f64,
    pub mean_q_std_error: f64,
    pub mean_q_z: f64,
}

impl QLawReport {
    pub fn verdict(&self) -> Verdict {
        Verdict::from_bool(self.comparison.verdict.passed() && self.mean_q_z.abs() <= 3.0)
    }

    pub fn to_report(&self) -> Report {
        let mut r = self.comparison.to_report("q_law");
        if let Value::Object(m) = &mut r.statistics {
            m.insert("mean_q".into(), json!(self.mean_q));
            m.insert("mean_q_std_error".into(), json!(self.mean_q_std_error));
            m.insert("mean_q_z".into(), json!(self.mean_q_z));
        }
        if let Value::Object(m) = &mut r.thresholds {
            m.insert("mean_q_max_abs_z".into(), json!(3.0));
        }
        r.verdict = self.verdict();
        r
    }
}

/// Histogram of `q = |e₁*v|²` over Haar vectors against `(N−1)(1−q)^{N−2}`.
pub fn check_q_law(n: u32, samples: u64, seed: u64, bins: usize) -> Result<QLawReport> {
    if n < 2 {
        return Err(Error::domain("n", "q law needs n >= 2"));
    }
    let axis = Axis::new(0.0, 1.0, bins)?;
    let kind = GridKind::Line {
        label: "q".into(),
        axis,
    };
    let parts = chunked_mc(samples, seed, |rng, m| {
        let mut h = HistogramGrid::new(kind.clone(), 1);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..m {
            let v = haar_vector(rng, n as usize);
            let q = v[0].norm_sqr();
            h.add_value(q);
            s += q;
            s2 += q * q;
        }
        h.n_matrices = m;
        (h, (s, s2, m))
    });
    let mut grid = HistogramGrid::new(kind, 1);
    let mut moments = Vec::with_capacity(parts.len());
    for (h, mo) in &parts {
        grid.merge(h);
        moments.push(*mo);
    }
    let comparison = compare_density(&grid, &DensityModel::QLaw { n }, &QuadSpec::default(), &Thresholds::default())?;
    let (mean, se) = mean_se(&moments);
    Ok(QLawReport {
        comparison,
        mean_q: mean,
        mean_q_std_error: se,
        mean_q_z: z_of(mean - 1.0 / n as f64, se),
    })
}

/// A polynomial with complex coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Result<Self> {
        while coeffs.len() > 1 && coeffs.last() == Some(&Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.len() < 2 {
            return Err(Error::domain("poly", "degree must be at least 1"));
        }
        Ok(Polynomial { coeffs })
    }

    /// Parses real-coefficient expressions such as `z`, `z^2-1` or `2z^3 + 0.5z - 1`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::domain("poly", format!("cannot parse polynomial `{s}`"));
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(bad());
        }
        let mut terms = Vec::new();
        let mut cur = String::new();
        for (i, c) in t.char_indices() {
            let after_exp = t[..i].ends_with(['e', 'E']) && !t[..i].ends_with('z');
            if (c == '+' || c == '-') && i > 0 && !after_exp {
                terms.push(std::mem::take(&mut cur));
            }
            cur.push(c);
        }
        terms.push(cur);
        let mut coeffs: Vec<f64> = Vec::new();
        for term in terms {
            let (sign, body) = match term.strip_prefix('-') {
                Some(b) => (-1.0, b),
                None => (1.0, term.strip_prefix('+').unwrap_or(&term)),
            };
            let (c, k) = match body.find('z') {
                None => (body.parse::<f64>().map_err(|_| bad())?, 0usize),
                Some(p) => {
                    let head = body[..p].trim_end_matches('*');
                    let c = if head.is_empty() { 1.0 } else { head.parse::<f64>().map_err(|_| bad())? };
                    let tail = &body[p + 1..];
                    let k = if tail.is_empty() {
                        1
                    } else {
                        tail.strip_prefix('^').and_then(|e| e.parse().ok()).ok_or_else(bad)?
                    };
                    (c, k)
                }
            };
            if coeffs.len() <= k {
                coeffs.resize(k + 1, 0.0);
            }
            coeffs[k] += sign * c;
        }
        Polynomial::new(coeffs.into_iter().map(|c| Complex64::new(c, 0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn derivative(&self) -> Vec<Complex64> {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * k as f64)
            .collect()
    }

    pub fn eval_derivative(&self, z: Complex64) -> Complex64 {
        self.derivative()
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Polynomial {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Roots as eigenvalues of the companion matrix.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let d = self.degree();
        let lead = self.coeffs[d];
        if d == 1 {
            return Ok(vec![-self.coeffs[0] / lead]);
        }
        let m = faer::Mat::from_fn(d, d, |i, j| {
            if i == 0 {
                -self.coeffs[d - 1 - j] / lead
            } else if i == j + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        linalg::eigenvalues(m.as_ref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquaredDeltaRow {
    pub eps: f64,
    /// `∫ δ_ε(P)²·|P|²·φ`.
    pub lhs: f64,
    /// `∫ δ_ε(P)·φ`.
    pub rhs: f64,
    /// `Ĉ(ε) = rhs / lhs`.
    pub c_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquaredDeltaTable {
    pub roots: Vec<Complex64>,
    /// `Σ φ(z₀)/|P′(z₀)|²`, the `ε → 0` value of `rhs`.
    pub rhs_limit: f64,
    pub rows: Vec<SquaredDeltaRow>,
}

impl SquaredDeltaTable {
    /// Relative distance of the last `Ĉ` from `4π`.
    pub fn final_relative_error(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| (r.c_hat / (4.0 * PI) - 1.0).abs())
    }

    pub fn to_report(&self, poly: &str, rel_tol: f64) -> Report {
        let err = self.final_relative_error();
        Report {
            schema: SCHEMA,
            check: "squared_delta".into(),
            params: json!({ "poly": poly, "eps": self.rows.iter().map(|r| r.eps).collect::<Vec<_>>() }),
            statistics: json!({
                "roots": self.roots,
                "rhs_limit": self.rhs_limit,
                "rows": self.rows,
                "target": 4.0 * PI,
                "final_relative_error": err,
            }),
            verdict: Verdict::from_bool(err <= rel_tol),
            thresholds: json!({ "final_relative_error": rel_tol }),
        }
    }
}

/// Gaussian-regularized estimates `Ĉ(ε)` of the constant in
/// `C·δ(P)²·|P|² = δ(P)`, integrated over discs around the roots of `P`.
pub fn check_squared_delta<F>(poly: &Polynomial, phi: F, eps_seq: &[f64], quad: &QuadSpec) -> Result<SquaredDeltaTable>
where
    F: Fn(Complex64) -> f64,
{
    if eps_seq.is_empty() || eps_seq.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::domain("eps", "need a non-empty list of positive values"));
    }
    let roots = poly.roots()?;
    let mut sep = f64::INFINITY;
    for i in 0..roots.len() {
        for k in i + 1..roots.len() {
            sep = sep.min((roots[i] - roots[k]).norm());
        }
    }
    let eps_max = eps_seq.iter().copied().fold(0.0, f64::max);
    let slopes: Vec<f64> = roots.iter().map(|&r| poly.eval_derivative(r).norm()).collect();
    for (r, &s) in roots.iter().zip(&slopes) {
        if s == 0.0 {
            return Err(Error::Singular(format!("root {r} is not simple")));
        }
        if sep < 10.0 * eps_max.sqrt() / s {
            return Err(Error::domain(
                "eps",
                format!("root separation {sep} is not large compared with sqrt(eps)"),
            ));
        }
    }
    let radius = (0.5 * sep).min(1.0);
    let rhs_limit: f64 = roots.iter().zip(&slopes).map(|(&r, &s)| phi(r) / (s * s)).sum();
    let spec = QuadSpec {
        abs_tol: 0.0,
        rel_tol: quad.rel_tol.max(1e-11),
        ..*quad
    };
    let mut rows = Vec::with_capacity(eps_seq.len());
    for &eps in eps_seq {
        let (mut lhs, mut rhs) = (0.0, 0.0);
        for (&r, &s) in roots.iter().zip(&slopes) {
            let w = eps.sqrt() / s;
            let breaks: Vec<f64> = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|k| k * w).collect();
            let dens = |x: f64, y: f64| {
                let z = Complex64::new(x, y);
                let p2 = poly.eval(z).norm_sqr();
                (p2, (-p2 / (2.0 * eps)).exp() / (2.0 * PI * eps), phi(z))
            };
            lhs += try_integrate_disc(
                |x, y| {
                    let (p2, d, f) = dens(x, y);
                    Ok(d * d * p2 * f)
                },
                (r.re, r.im),
                radius,
                &breaks,
                &spec,
            )?;
            rhs += try_integrate_disc(
                |x, y| {
                    let (_, d, f) = dens(x, y);
                    Ok(d * f)
                },
                (r.re, r.im),
                radius,
                &breaks,
                &spec,
            )?;
        }
        rows.push(SquaredDeltaRow {
            eps,
            lhs,
            rhs,
            c_hat: rhs / lhs,
        });
    }
    Ok(SquaredDeltaTable { roots, rhs_limit, rows })
}

/// Closed form of the regularized `N = 2` sphere integral `L_ε(σ₁², σ₂²)`.
pub fn izhc_n2_closed_form(s1: f64, s2: f64, eps: f64) -> Result<f64> {
    if !(s1 >= 0.0 && s2 >= 0.0 && s1.is_finite() && s2.is_finite()) {
        return Err(Error::domain("sigma_sq", "must be finite and >= 0"));
    }
    if !(eps > 0.0) {
        return Err(Error::domain("eps", "must be positive"));
    }
    if (s1 - s2).abs() <= 1e-9 * s1.max(s2).max(1.0) {
        return Err(Error::Singular("sigma1^2 = sigma2^2".into()));
    }
    let e1 = (-s1 / (2.0 * eps)).exp();
    let e2 = (-s2 / (2.0 * eps)).exp();
    Ok(-(e1 / (s1 - s2) + e2 / (s2 - s1)) / (2.0 * PI * PI * eps))
}

/// Monte-Carlo Haar average against [`izhc_n2_closed_form`].
pub fn check_izhc_n2(s1: f64, s2: f64, eps: f64, samples: u64, seed: u64) -> Result<McAgreement> {
    let closed = izhc_n2_closed_form(s1, s2, eps)?;
    if samples < 2 {
        return Err(Error::domain("samples", "need at least 2 samples"));
    }
    let pref = 1.0 / (2.0 * PI * eps).powi(2);
    let parts = chunked_mc(samples, seed, |rng, m| {
        let (mut s, mut s2s) = (0.0, 0.0);
        for _ in 0..m {
            let v = haar_vector(rng, 2);
            let x = pref * (-(s1 * v[0].norm_sqr() + s2 * v[1].norm_sqr()) / (2.0 * eps)).exp();
            s += x;
            s2s += x * x;
        }
        (s, s2s, m)
    });
    Ok(McAgreement::new(
        format!("sigma1_sq={s1},sigma2_sq={s2},eps={eps}"),
        2,
        samples,
        seed,
        mean_se(&parts),
        closed,
        4.0,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsRow {
    pub label: String,
    pub errors: Vec<f64>,
    pub decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsTable {
    pub n_seq: Vec<u32>,
    pub rows: Vec<AsymptoticsRow>,
}

impl AsymptoticsTable {
    pub fn all_decreasing(&self) -> bool {
        self.rows.iter().all(|r| r.decreasing)
    }

    pub fn to_report(&self) -> Report {
        let stats: BTreeMap<&str, &AsymptoticsRow> = self.rows.iter().map(|r| (r.label.as_str(), r)).collect();
        Report {
            schema: SCHEMA,
            check: "asymptotics".into(),
            params: json!({ "n_seq": self.n_seq }),
            statistics: json!(stats),
            verdict: Verdict::from_bool(self.all_decreasing()),
            thresholds: json!({ "errors": "strictly decreasing in n" }),
        }
    }
}

fn ln_gamma_ratio(n: u32, l: u32, w2: f64) -> Result<f64> {
    let m = n - l;
    Ok(ln_regularized_gamma_upper(m, n as f64 * w2)? + log_gamma(m)? - log_gamma(n)?)
}

/// Relative-error tables of `I^(k)(N, NΔ)` and `Γ(N−l, N|w|²)/Γ(N)` against
/// their large-`N` forms.
pub fn check_asymptotics(n_seq: &[u32]) -> Result<AsymptoticsTable> {
    if n_seq.is_empty() || n_seq.iter().any(|&n| !(20..=2000).contains(&n)) || n_seq.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("n_seq", "must be increasing values within [20, 2000]"));
    }
    type ErrFn = Box<dyn Fn(u32) -> Result<f64>>;
    let mut cases: Vec<(String, ErrFn)> = Vec::new();
    for k in [0u32, 1] {
        let d = 0.5;
        cases.push((
            format!("i_k k={k} delta=0.5"),
            Box::new(move |n| {
                let nf = n as f64;
                Ok((ln_i_k(n, k, nf * d)? + (nf * (1.0 + d)).ln()).exp_m1().abs())
            }),
        ));
        let d = -1.5;
        cases.push((
            format!("i_k k={k} delta=-1.5 (log)"),
            Box::new(move |n| {
                let nf = n as f64;
                let li = ln_i_k(n, k, nf * d)?;
                let asy = 0.5 * (2.0 * PI / nf).ln() - nf * (1.0 + d) - (nf + k as f64 - 1.0) * d.abs().ln();
                Ok(((li - asy) / li).abs())
            }),
        ));
    }
    for l in [0u32, 1] {
        cases.push((
            format!("gamma l={l} w2=0.5"),
            Box::new(move |n| {
                if l == 0 {
                    regularized_gamma_lower(n, 0.5 * n as f64)
                } else {
                    Ok((ln_gamma_ratio(n, l, 0.5)? + (l as f64) * (n as f64).ln()).exp_m1().abs())
                }
            }),
        ));
        cases.push((
            format!("gamma l={l} w2=2"),
            Box::new(move |n| {
                let nf = n as f64;
                let w2: f64 = 2.0;
                let asy = nf * (1.0 - w2) - l as f64 * nf.ln() - 0.5 * (2.0 * PI * nf).ln()
                    + (nf - l as f64) * w2.ln()
                    - (w2 - 1.0).ln();
                Ok((ln_gamma_ratio(n, l, w2)? - asy).exp_m1().abs())
            }),
        ));
    }
    let mut rows = Vec::with_capacity(cases.len());
    for (label, f) in cases {
        let errors = n_seq.iter().map(|&n| f(n)).collect::<Result<Vec<_>>>()?;
        let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
        rows.push(AsymptoticsRow {
            label,
            errors,
            decreasing,
        });
    }
    Ok(AsymptoticsTable {
        n_seq: n_seq.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{run_mc, EnsembleSpec, McOptions};
    use approx::assert_relative_eq;

    fn plane(lim: f64, bins: usize) -> GridKind {
        GridKind::Plane {
            x: Axis::new(-lim, lim, bins).unwrap(),
            y: Axis::new(-lim, lim, bins).unwrap(),
        }
    }

    #[test]
    fn ginue_expected_mass() {
        let mut g = HistogramGrid::new(plane(5.0, 20), 4);
        g.n_matrices = 10;
        let e = expected_counts(&g, &DensityModel::Ginue { n: 4 }, &QuadSpec::default()).unwrap();
        assert_relative_eq!(e.iter().sum::<f64>(), 40.0, max_relative = 1e-6);
    }

    #[test]
    fn empty_grid_is_an_error() {
        let g = HistogramGrid::new(plane(4.0, 8), 4);
        let r = compare_density(&g, &DensityModel::Ginue { n: 4 }, &QuadSpec::default(), &Thresholds::default());
        assert!(matches!(r, Err(Error::EmptyGrid)));
    }

    #[test]
    fn model_domain_error_names_bin() {
        let mut g = HistogramGrid::new(plane(1.0, 2), 4);
        g.n_matrices = 1;
        let r = expected_counts(&g, &DensityModel::Interpolating { tau: 1.0, n: 4 }, &QuadSpec::default());
        assert!(matches!(r, Err(Error::ModelBin { bin: 0, .. })), "{r:?}");
    }

    #[test]
    fn incompatible_model_is_rejected() {
        let mut g = HistogramGrid::new(plane(1.0, 2), 4);
        g.n_matrices = 1;
        assert!(matches!(
            expected_counts(&g, &DensityModel::QLaw { n: 4 }, &QuadSpec::default()),
            Err(Error::Domain { param: "model", .. })
        ));
    }

    #[test]
    fn ginue_small_run_passes_and_wrong_n_fails() {
        let spec = EnsembleSpec::interpolating(0.0, 4, 4000, 17);
        let out = run_mc(&spec, None, &[plane(3.0, 12)], &McOptions::default()).unwrap();
        let g = &out.grids[0];
        let q = QuadSpec::default();
        let good = compare_density(g, &DensityModel::Ginue { n: 4 }, &q, &Thresholds::default()).unwrap();
        assert!(good.verdict.passed(), "{} {}", good.chi2_per_dof, good.max_abs_z);
        let bad = compare_density(g, &DensityModel::Ginue { n: 3 }, &q, &Thresholds::default()).unwrap();
        assert!(!bad.verdict.passed());
        let rep = good.to_report("compare");
        let text = rep.to_json().unwrap();
        assert!(text.contains("\"schema\": 1"));
        assert!(text.contains("\"verdict\": \"pass\""));
    }

    #[test]
    fn sphere_lemma_constant_is_exact() {
        for n in 2..=8 {
            let r = check_sphere_lemma("1", |_| 1.0, n, 1000, 1).unwrap();
            assert_eq!(r.mc_estimate, 1.0);
            assert_relative_eq!(r.reference, 1.0, max_relative = 1e-12);
            assert!(r.verdict.passed(), "{r:?}");
        }
    }

    #[test]
    fn sphere_lemma_mean_u() {
        let r = check_sphere_lemma("u", |u| u, 5, 100_000, 2).unwrap();
        assert_relative_eq!(r.reference, 1.0 / 3.0, max_relative = 1e-10);
        assert!(r.z_score.abs() <= 4.0);
    }

    #[test]
    fn sphere_fn_parsing() {
        assert_eq!(SphereFn::parse("u").unwrap(), SphereFn::U);
        assert_eq!(SphereFn::parse("exp:-3").unwrap(), SphereFn::Exp { c: -3.0 });
        assert!(SphereFn::parse("sin").is_err());
    }

    #[test]
    fn q_law_n2_is_uniform() {
        let r = check_q_law(2, 200_000, 5, 20).unwrap();
        for b in &r.comparison.bins {
            assert_relative_eq!(b.expected, 10_000.0, max_relative = 1e-12);
        }
        assert!(r.verdict().passed());
    }

    #[test]
    fn polynomial_parsing_and_roots() {
        let p = Polynomial::parse("z^2 - 1").unwrap();
        assert_eq!(p.coeffs, vec![Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        let mut r = p.roots().unwrap();
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((r[0] + 1.0).norm() < 1e-12 && (r[1] - 1.0).norm() < 1e-12);
        let q = Polynomial::parse("2z^3+0.5*z-1e-1").unwrap();
        assert_eq!(q.degree(), 3);
        assert_relative_eq!(q.eval(Complex64::new(1.0, 0.0)).re, 2.4, max_relative = 1e-15);
        assert!(Polynomial::parse("3").is_err());
        assert!(Polynomial::parse("z^x").is_err());
    }

    #[test]
    fn squared_delta_linear_matches_closed_form() {
        let p = Polynomial::parse("z").unwrap();
        let t = check_squared_delta(&p, |z| (-z.norm_sqr()).exp(), &[1e-2, 1e-3], &QuadSpec::default()).unwrap();
        for r in &t.rows {
            let e = r.eps;
            assert_relative_eq!(r.c_hat, 4.0 * PI * (1.0 + e).powi(2) / (1.0 + 2.0 * e), max_relative = 1e-8);
        }
    }

    #[test]
    fn squared_delta_scale_invariance() {
        let p = Polynomial::parse("z^2-1").unwrap();
        let phi = |z: Complex64| (-z.norm_sqr()).exp();
        let a = check_squared_delta(&p, phi, &[1e-3], &QuadSpec::default()).unwrap();
        let b = check_squared_delta(&p.scaled(2.0), phi, &[4e-3], &QuadSpec::default()).unwrap();
        assert_relative_eq!(a.rows[0].c_hat, b.rows[0].c_hat, max_relative = 1e-3);
        assert_relative_eq!(a.rhs_limit, (-1.0f64).exp() / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn izhc_closed_form_symmetric_and_integrated() {
        let a = izhc_n2_closed_form(0.5, 2.0, 0.05).unwrap();
        let b = izhc_n2_closed_form(2.0, 0.5, 0.05).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-14);
        let direct = crate::quad::try_integrate(
            |t| Ok((-(0.5 * t + 2.0 * (1.0 - t)) / 0.1).exp() / (2.0 * PI * 0.05).powi(2)),
            0.0,
            1.0,
            &QuadSpec::default(),
        )
        .unwrap();
        assert_relative_eq!(a, direct, max_relative = 1e-10);
        assert!(matches!(izhc_n2_closed_form(1.0, 1.0, 0.1), Err(Error::Singular(_))));
    }

    #[test]
    fn izhc_small_sigma_dominates() {
        for eps in [1e-2, 1e-3] {
            let l = izhc_n2_closed_form(0.1, 3.0, eps).unwrap();
            let dominant = (-0.1 / (2.0 * eps)).exp() / (2.0 * PI * PI * eps * 2.9);
            assert_relative_eq!(l, dominant, max_relative = 1e-6);
        }
    }

    #[test]
    fn izhc_mc_agrees() {
        let r = check_izhc_n2(0.5, 2.0, 0.05, 200_000, 3).unwrap();
        assert!(r.z_score.abs() <= 4.0, "{r:?}");
    }

    #[test]
    fn asymptotic_tables_decrease() {
        let t = check_asymptotics(&[25, 100, 400]).unwrap();
        for r in &t.rows {
            assert!(r.decreasing, "{r:?}");
        }
        let g = t.rows.iter().find(|r| r.label == "gamma l=1 w2=0.5").unwrap();
        assert!(g.errors[1] < 0.1);
        assert!(check_asymptotics(&[10, 100]).is_err());
        assert!(check_asymptotics(&[100, 50]).is_err());
    }

    #[test]
    fn l1_of_exact_expectation_is_zero() {
        let kind = GridKind::Strip {
            x0: 0.0,
            half_width: 0.5,
            scaled_x: true,
            y: Axis::new(-2.0, 2.0, 8).unwrap(),
        };
        let model = DensityModel::WeakNonReality {
            delta: 1.0,
            form: WeakForm::Closed,
        };
        let mut g = HistogramGrid::new(kind, 64);
        g.n_matrices = 1;
        let e = expected_counts(&g, &model, &QuadSpec::default()).unwrap();
        g.n_matrices = 1_000_000;
        g.counts = e.iter().map(|x| (x * 1e6).round() as u64).collect();
        assert!(l1_distance(&g, &model, &QuadSpec::default()).unwrap() < 1e-5);
    }
}

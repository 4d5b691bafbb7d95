//! Random-matrix sampling, eigendecomposition and histogram accumulation.
//!
//! Matrix `g` of a run is drawn from ChaCha8 stream `g % streams` at
//! position `g / streams`, so every matrix is a pure function of
//! `(seed, stream, index)` and the histograms of a run do not depend on how
//! many worker threads produced them.

use std::io::Write;
use std::time::Instant;

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::TOL;
use crate::deform::Deformation;
use crate::error::{Error, Result};
use crate::linalg::{self, frobenius, CMat};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EnsembleKind {
    Interpolating { tau: f64 },
    Deformed { deformation: Deformation },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub streams: u32,
}

impl EnsembleSpec {
    pub fn interpolating(tau: f64, n: usize, samples: u64, seed: u64) -> Self {
        EnsembleSpec {
            kind: EnsembleKind::Interpolating { tau },
            n,
            samples,
            seed,
            streams: 64,
        }
    }

    pub fn deformed(deformation: Deformation, samples: u64, seed: u64) -> Self {
        EnsembleSpec {
            n: deformation.dim(),
            kind: EnsembleKind::Deformed { deformation },
            samples,
            seed,
            streams: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::domain("n", "matrix size must be >= 2"));
        }
        if self.samples < 1 {
            return Err(Error::domain("samples", "must be >= 1"));
        }
        if self.streams < 1 {
            return Err(Error::domain("streams", "must be >= 1"));
        }
        match &self.kind {
            EnsembleKind::Interpolating { tau } => {
                if !(0.0..=1.0).contains(tau) {
                    return Err(Error::domain("tau", format!("must lie in [0, 1], got {tau}")));
                }
            }
            EnsembleKind::Deformed { deformation } => {
                deformation.validate()?;
                if deformation.dim() != self.n {
                    return Err(Error::Dimension {
                        expected: self.n,
                        got: deformation.dim(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Generator for matrix `index` of `stream`.
pub fn matrix_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos((index as u128) << 36);
    rng
}

/// A pair of independent standard normals (Marsaglia's polar method).
pub fn normal_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    loop {
        let u = 2.0 * rng.random::<f64>() - 1.0;
        let v = 2.0 * rng.random::<f64>() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let f = (-2.0 * s.ln() / s).sqrt();
            return (u * f, v * f);
        }
    }
}

/// Haar-distributed point of the complex unit sphere in `C^n`.
pub fn haar_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| {
            let (a, b) = normal_pair(rng);
            Complex64::new(a, b)
        })
        .collect();
    let s = 1.0 / linalg::norm_sqr(&v).sqrt();
    v.iter_mut().for_each(|x| *x *= s);
    v
}

/// Matrix `index` of `stream`, entries filled row-major.
pub fn sample_matrix(spec: &EnsembleSpec, stream: u32, index: u64) -> Result<CMat> {
    spec.validate()?;
    if stream >= spec.streams {
        return Err(Error::domain("stream", format!("must be < {}", spec.streams)));
    }
    Ok(draw(spec, stream, index))
}

fn draw(spec: &EnsembleSpec, stream: u32, index: u64) -> CMat {
    let n = spec.n;
    let mut rng = matrix_rng(spec.seed, stream as u64, index);
    let mut m = Mat::<Complex64>::zeros(n, n);
    match &spec.kind {
        EnsembleKind::Interpolating { tau } => {
            let cr = ((1.0 + tau) / 2.0).sqrt();
            let ci = ((1.0 - tau) / 2.0).sqrt();
            for i in 0..n {
                for j in 0..n {
                    let (g1, g2) = normal_pair(&mut rng);
                    m[(i, j)] = Complex64::new(g1 * cr, if ci == 0.0 { 0.0 } else { g2 * ci });
                }
            }
        }
        EnsembleKind::Deformed { deformation } => {
            let c = std::f64::consts::FRAC_1_SQRT_2;
            for i in 0..n {
                for j in 0..n {
                    let (g1, g2) = normal_pair(&mut rng);
                    m[(i, j)] = Complex64::new(g1 * c, g2 * c) + deformation.entry(i, j);
                }
            }
        }
    }
    m
}

/// Stream and in-stream index of the `g`-th matrix of a run.
pub fn locate(spec: &EnsembleSpec, g: u64) -> (u32, u64) {
    let s = spec.streams as u64;
    ((g % s) as u32, g / s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub z: Complex64,
    /// Right eigenvector, `v*v = 1`, largest entry real positive.
    pub v: Vec<Complex64>,
    pub residual: f64,
    pub degenerate: bool,
}

fn cmp_z(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn is_real(x: &CMat) -> bool {
    (0..x.ncols()).all(|j| (0..x.nrows()).all(|i| x[(i, j)].im == 0.0))
}

fn real_part(x: &CMat) -> Mat<f64> {
    Mat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)].re)
}

fn flag_degenerate(zs: &[Complex64]) -> Vec<bool> {
    let mut flags = vec![false; zs.len()];
    for i in 0..zs.len() {
        for k in i + 1..zs.len() {
            if (zs[i] - zs[k]).norm() < TOL.eigen_spacing {
                flags[i] = true;
                flags[k] = true;
            }
        }
    }
    flags
}

/// Eigenvalues sorted by `(Re, Im)`. Real matrices go through the real
/// solver, which returns exact conjugate pairs.
pub fn spectral_values(x: &CMat) -> Result<Vec<Complex64>> {
    if x.nrows() != x.ncols() {
        return Err(Error::Dimension {
            expected: x.nrows(),
            got: x.ncols(),
        });
    }
    let mut zs = if is_real(x) {
        linalg::eigenvalues_real(real_part(x).as_ref())?
    } else {
        linalg::eigenvalues(x.as_ref())?
    };
    if zs.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    zs.sort_by(cmp_z);
    Ok(zs)
}

/// All eigenpairs, sorted by `(Re, Im)`, each residual checked against
/// `tol·‖X‖_F`.
pub fn spectral_decompose(x: &CMat, tol: f64) -> Result<Vec<EigenPair>> {
    let n = x.nrows();
    if n != x.ncols() {
        return Err(Error::Dimension {
            expected: n,
            got: x.ncols(),
        });
    }
    let (vals, vecs) = if is_real(x) {
        linalg::eigen_real(real_part(x).as_ref())?
    } else {
        linalg::eigen(x.as_ref())?
    };
    let xnorm = frobenius(x.as_ref());
    let mut pairs = Vec::with_capacity(n);
    for (k, &z) in vals.iter().enumerate() {
        let mut v: Vec<Complex64> = (0..n).map(|i| vecs[(i, k)]).collect();
        let nn = linalg::norm_sqr(&v).sqrt();
        if !(nn > 0.0 && nn.is_finite() && z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Eigensolver(format!("degenerate eigenvector for {z}")));
        }
        let big = v
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(Complex64::new(1.0, 0.0));
        let phase = big.conj() / (big.norm() * nn);
        v.iter_mut().for_each(|c| *c *= phase);
        let xv = linalg::matvec(x.as_ref(), &v);
        let residual = xv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - z * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual > tol * xnorm.max(f64::MIN_POSITIVE) {
            return Err(Error::Eigensolver(format!(
                "residual {residual:e} exceeds {tol:e}·|X| for eigenvalue {z}"
            )));
        }
        pairs.push(EigenPair {
            z,
            v,
            residual,
            degenerate: false,
        });
    }
    pairs.sort_by(|a, b| cmp_z(&a.z, &b.z));
    let zs: Vec<Complex64> = pairs.iter().map(|p| p.z).collect();
    for (p, f) in pairs.iter_mut().zip(flag_degenerate(&zs)) {
        p.degenerate = f;
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralRecord {
    pub z: Complex64,
    /// `|vᵀv|²`, plain transpose.
    pub u: f64,
    /// `|r*v|²` for the probe `r`, when one was supplied.
    pub q: Option<f64>,
    pub residual: f64,
    pub degenerate: bool,
}

pub fn extract_record(pair: &EigenPair, probe: Option<&[Complex64]>) -> SpectralRecord {
    let vtv: Complex64 = pair.v.iter().map(|c| c * c).sum();
    SpectralRecord {
        z: pair.z,
        u: vtv.norm_sqr(),
        q: probe.map(|r| linalg::cdot(r, &pair.v).norm_sqr()),
        residual: pair.residual,
        degenerate: pair.degenerate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub bins: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, bins: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) || bins == 0 {
            return Err(Error::domain(
                "axis",
                format!("need finite min < max and bins >= 1, got {min}:{max}:{bins}"),
            ));
        }
        Ok(Axis { min, max, bins })
    }

    pub fn width(&self) -> f64 {
        (self.max - self.min) / self.bins as f64
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        (self.min + i as f64 * w, self.min + (i + 1) as f64 * w)
    }

    pub fn center(&self, i: usize) -> f64 {
        let (a, b) = self.edges(i);
        0.5 * (a + b)
    }

    /// Bin of `v` on `[min, max)`.
    pub fn index(&self, v: f64) -> Option<usize> {
        if !(v >= self.min && v < self.max) {
            return None;
        }
        let i = ((v - self.min) / (self.max - self.min) * self.bins as f64) as usize;
        Some(i.min(self.bins - 1))
    }
}

/// What a histogram bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GridKind {
    /// Eigenvalues over an `(x, y)` rectangle.
    Plane { x: Axis, y: Axis },
    /// `Im z` of eigenvalues with `|x − x0| < half_width`; with `scaled_x`
    /// the condition applies to `Re z/√N`.
    Strip {
        x0: f64,
        half_width: f64,
        scaled_x: bool,
        y: Axis,
    },
    /// Single counter of eigenvalues with `|Im z| < half_width`.
    RealAxis { half_width: f64 },
    /// `ũ = N·|vᵀv|²` of eigenvalues with `|z/√N − center| < radius`.
    DiscOverlap {
        center: Complex64,
        radius: f64,
        u: Axis,
    },
    /// `(|z|, u)` of every eigenvalue.
    ModulusOverlap { r: Axis, u: Axis },
    /// Overlap `q` with the probe, for eigenvalues in the disc `|z − center| < radius`.
    ProbeOverlap {
        center: Complex64,
        radius: f64,
        q: Axis,
    },
    /// A plain 1D histogram of scalar samples (no eigenvalues involved).
    Line { label: String, axis: Axis },
}

impl GridKind {
    pub fn len(&self) -> usize {
        match self {
            GridKind::Plane { x, y } => x.bins * y.bins,
            GridKind::Strip { y, .. } => y.bins,
            GridKind::RealAxis { .. } => 1,
            GridKind::DiscOverlap { u, .. } => u.bins,
            GridKind::ModulusOverlap { r, u } => r.bins * u.bins,
            GridKind::ProbeOverlap { q, .. } => q.bins,
            GridKind::Line { axis, .. } => axis.bins,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn needs_vectors(&self) -> bool {
        matches!(
            self,
            GridKind::DiscOverlap { .. } | GridKind::ModulusOverlap { .. } | GridKind::ProbeOverlap { .. }
        )
    }

    /// Real-axis detector with half-width `max(10·√(1−τ), 1e−9)`.
    pub fn real_axis_for_tau(tau: f64) -> Self {
        GridKind::RealAxis {
            half_width: (10.0 * (1.0 - tau).max(0.0).sqrt()).max(1e-9),
        }
    }
}

/// Integer histogram. After a run over a grid of eigenvalue kind,
/// `Σ counts + overflow = n_matrices·n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramGrid {
    pub kind: GridKind,
    pub n: usize,
    pub counts: Vec<u64>,
    pub n_matrices: u64,
    pub overflow: u64,
}

impl HistogramGrid {
    pub fn new(kind: GridKind, n: usize) -> Self {
        let len = kind.len();
        HistogramGrid {
            kind,
            n,
            counts: vec![0; len],
            n_matrices: 0,
            overflow: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Whether `Σ counts + overflow = n_matrices·n` (for eigenvalue grids).
    pub fn mass_conserved(&self) -> bool {
        self.total() + self.overflow == self.n_matrices * self.n as u64
    }

    fn bin_of(&self, r: &SpectralRecord) -> Option<usize> {
        let sn = (self.n as f64).sqrt();
        match &self.kind {
            GridKind::Plane { x, y } => Some(x.index(r.z.re)? * y.bins + y.index(r.z.im)?),
            GridKind::Strip {
                x0,
                half_width,
                scaled_x,
                y,
            } => {
                let xs = if *scaled_x { r.z.re / sn } else { r.z.re };
                if (xs - x0).abs() < *half_width {
                    y.index(r.z.im)
                } else {
                    None
                }
            }
            GridKind::RealAxis { half_width } => (r.z.im.abs() < *half_width).then_some(0),
            GridKind::DiscOverlap { center, radius, u } => {
                if (r.z / sn - center).norm() < *radius {
                    u.index(self.n as f64 * r.u)
                } else {
                    None
                }
            }
            GridKind::ModulusOverlap { r: ra, u } => {
                Some(ra.index(r.z.norm())? * u.bins + u.index(r.u)?)
            }
            GridKind::ProbeOverlap { center, radius, q } => {
                if (r.z - center).norm() < *radius {
                    q.index(r.q?)
                } else {
                    None
                }
            }
            GridKind::Line { .. } => None,
        }
    }

    /// Adds one eigenvalue record.
    pub fn add_record(&mut self, r: &SpectralRecord) {
        match self.bin_of(r) {
            Some(i) => self.counts[i] += 1,
            None => self.overflow += 1,
        }
    }

    /// Adds a scalar sample to a [`GridKind::Line`] histogram.
    pub fn add_value(&mut self, v: f64) {
        if let GridKind::Line { axis, .. } = &self.kind {
            match axis.index(v) {
                Some(i) => self.counts[i] += 1,
                None => self.overflow += 1,
            }
        }
    }

    pub fn merge(&mut self, other: &HistogramGrid) {
        debug_assert_eq!(self.kind, other.kind);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n_matrices += other.n_matrices;
        self.overflow += other.overflow;
    }

    /// CSV with bin centers and counts, rows in bin order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        match &self.kind {
            GridKind::Plane { x, y } => {
                writeln!(w, "x,y,count")?;
                for i in 0..x.bins {
                    for j in 0..y.bins {
                        writeln!(w, "{},{},{}", fmt_f(x.center(i)), fmt_f(y.center(j)), self.counts[i * y.bins + j])?;
                    }
                }
            }
            GridKind::ModulusOverlap { r, u } => {
                writeln!(w, "r,u,count")?;
                for i in 0..r.bins {
                    for j in 0..u.bins {
                        writeln!(w, "{},{},{}", fmt_f(r.center(i)), fmt_f(u.center(j)), self.counts[i * u.bins + j])?;
                    }
                }
            }
            GridKind::RealAxis { half_width } => {
                writeln!(w, "half_width,count")?;
                writeln!(w, "{},{}", fmt_f(*half_width), self.counts[0])?;
            }
            GridKind::Strip { y: a, .. }
            | GridKind::DiscOverlap { u: a, .. }
            | GridKind::ProbeOverlap { q: a, .. }
            | GridKind::Line { axis: a, .. } => {
                writeln!(w, "coord,count")?;
                for i in 0..a.bins {
                    writeln!(w, "{},{}", fmt_f(a.center(i)), self.counts[i])?;
                }
            }
        }
        writeln!(w, "# n_matrices={} overflow={}", self.n_matrices, self.overflow)?;
        Ok(())
    }
}

/// Full-precision (17 significant digits) float formatting used in every CSV.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub workers: usize,
    pub keep_records: bool,
    /// Eigenpair residual bound relative to `‖X‖_F`.
    pub residual_tol: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            workers: 1,
            keep_records: false,
            residual_tol: TOL.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub n_matrices: u64,
    pub skipped: u64,
    pub degenerate_records: u64,
    /// Largest eigenpair residual; absent for eigenvalue-only runs.
    pub max_residual: Option<f64>,
    pub mass_conserved: bool,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct McOutput {
    pub grids: Vec<HistogramGrid>,
    pub summary: McSummary,
    /// Per accepted matrix, in matrix order.
    pub records: Option<Vec<(u64, Vec<SpectralRecord>)>>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Run(format!("thread pool: {e}")))
}

/// Records of matrix `g`, eigenvalue-only when `vectors` is false.
pub fn matrix_records(
    spec: &EnsembleSpec,
    g: u64,
    vectors: bool,
    probe: Option<&[Complex64]>,
    residual_tol: f64,
) -> Result<Vec<SpectralRecord>> {
    let (stream, index) = locate(spec, g);
    let x = draw(spec, stream, index);
    if vectors {
        Ok(spectral_decompose(&x, residual_tol)?
            .iter()
            .map(|p| extract_record(p, probe))
            .collect())
    } else {
        let zs = spectral_values(&x)?;
        let flags = flag_degenerate(&zs);
        Ok(zs
            .into_iter()
            .zip(flags)
            .map(|(z, degenerate)| SpectralRecord {
                z,
                u: f64::NAN,
                q: None,
                residual: f64::NAN,
                degenerate,
            })
            .collect())
    }
}

/// Applies `f` to the records of every matrix of the run, returning the
/// results in matrix order (`None` for skipped matrices).
pub fn map_matrices<T, F>(
    spec: &EnsembleSpec,
    probe: Option<&[Complex64]>,
    vectors: bool,
    opts: &McOptions,
    f: F,
) -> Result<Vec<Option<T>>>
where
    T: Send,
    F: Fn(u64, &[SpectralRecord]) -> T + Sync,
{
    spec.validate()?;
    check_probe(spec, probe)?;
    let out = pool(opts.workers)?.install(|| {
        (0..spec.samples)
            .into_par_iter()
            .map(|g| {
                matrix_records(spec, g, vectors, probe, opts.residual_tol)
                    .ok()
                    .map(|r| f(g, &r))
            })
            .collect::<Vec<_>>()
    });
    check_skips(spec, out.iter().filter(|o| o.is_none()).count() as u64)?;
    Ok(out)
}

fn check_probe(spec: &EnsembleSpec, probe: Option<&[Complex64]>) -> Result<()> {
    if let Some(p) = probe {
        if p.len() != spec.n {
            return Err(Error::Dimension {
                expected: spec.n,
                got: p.len(),
            });
        }
    }
    Ok(())
}

fn check_skips(spec: &EnsembleSpec, skipped: u64) -> Result<()> {
    if skipped as f64 > TOL.max_skip_fraction * spec.samples as f64 {
        return Err(Error::Run(format!(
            "{skipped} of {} matrices failed to decompose",
            spec.samples
        )));
    }
    Ok(())
}

struct Acc {
    grids: Vec<HistogramGrid>,
    skipped: u64,
    degenerate: u64,
    max_residual: f64,
    records: Vec<(u64, Vec<SpectralRecord>)>,
}

impl Acc {
    fn merge(mut self, other: Acc) -> Acc {
        for (a, b) in self.grids.iter_mut().zip(&other.grids) {
            a.merge(b);
        }
        self.skipped += other.skipped;
        self.degenerate += other.degenerate;
        self.max_residual = self.max_residual.max(other.max_residual);
        self.records.extend(other.records);
        self
    }
}

/// Draws `spec.samples` matrices, decomposes them and fills every grid.
pub fn run_mc(
    spec: &EnsembleSpec,
    probe: Option<&[Complex64]>,
    grids: &[GridKind],
    opts: &McOptions,
) -> Result<McOutput> {
    spec.validate()?;
    check_probe(spec, probe)?;
    for g in grids {
        if matches!(g, GridKind::Line { .. }) {
            return Err(Error::domain("grid", "line histograms are not filled from eigenvalues"));
        }
        if matches!(g, GridKind::ProbeOverlap { .. }) && probe.is_none() {
            return Err(Error::domain("probe", "an overlap-q grid needs a probe vector"));
        }
    }
    let vectors = opts.keep_records || grids.iter().any(GridKind::needs_vectors);
    let start = Instant::now();
    let empty = || Acc {
        grids: grids.iter().map(|k| HistogramGrid::new(k.clone(), spec.n)).collect(),
        skipped: 0,
        degenerate: 0,
        max_residual: 0.0,
        records: Vec::new(),
    };
    let acc = pool(opts.workers)?.install(|| {
        (0..spec.samples)
            .into_par_iter()
            .fold(empty, |mut acc, g| {
                match matrix_records(spec, g, vectors, probe, opts.residual_tol) {
                    Ok(recs) => {
                        for grid in acc.grids.iter_mut() {
                            grid.n_matrices += 1;
                            for r in &recs {
                                grid.add_record(r);
                            }
                        }
                        for r in &recs {
                            if r.degenerate {
                                acc.degenerate += 1;
                            }
                            if r.residual > acc.max_residual {
                                acc.max_residual = r.residual;
                            }
                        }
                        if opts.keep_records {
                            acc.records.push((g, recs));
                        }
                    }
                    Err(_) => acc.skipped += 1,
                }
                acc
            })
            .reduce(empty, Acc::merge)
    });
    check_skips(spec, acc.skipped)?;
    let mut records = acc.records;
    records.sort_by_key(|(g, _)| *g);
    let summary = McSummary {
        n_matrices: spec.samples - acc.skipped,
        skipped: acc.skipped,
        degenerate_records: acc.degenerate,
        max_residual: vectors.then_some(acc.max_residual),
        mass_conserved: acc.grids.iter().all(HistogramGrid::mass_conserved),
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(McOutput {
        grids: acc.grids,
        summary,
        records: opts.keep_records.then_some(records),
    })
}

/// Record dump with header `re_z,im_z,u,q,residual`.
pub fn write_records_csv<W: Write>(mut w: W, records: &[(u64, Vec<SpectralRecord>)]) -> Result<()> {
    writeln!(w, "re_z,im_z,u,q,residual")?;
    for (_, recs) in records {
        for r in recs {
            let q = r.q.map(fmt_f).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_f(r.z.re),
                fmt_f(r.z.im),
                fmt_f(r.u),
                q,
                fmt_f(r.residual)
            )?;
        }
    }
    Ok(())
}

//! Command-line front end.
//!
//! Every subcommand writes its fully resolved configuration next to its
//! outputs; `replay` re-runs such a file. Exit codes: 0 success or pass,
//! 1 statistical fail, 2 usage or domain error, 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::deform::{
    outlier_gaussian_profile, outlier_rate, outlier_sigma, overlap_ld_rate, rank_one_normal_mean_density,
    Deformation, OutlierParams,
};
use crate::ensemble::{
    fmt_f, run_mc, write_records_csv, Axis, EnsembleSpec, GridKind, HistogramGrid, McOptions,
};
use crate::error::{Error, Result};
use crate::interp::{
    ginoe_complex_density, ginoe_real_density, ginue_density, limiting_eigvec_jpd, mean_density_interpolating,
    weak_nonreality_density_with, InterpParams, WeakForm, WeakNonRealityParams,
};
use crate::quad::QuadSpec;
use crate::verify::{
    check_asymptotics, check_izhc_n2, check_q_law, check_sphere_lemma, check_squared_delta, compare_density,
    DensityModel, Polynomial, Report, SphereFn, Thresholds, Verdict,
};

pub const WORKERS_ENV: &str = "GINIBRE_JPD_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "ginibre-jpd", version, about = "Eigenvalue/eigenvector densities of non-Hermitian Gaussian matrices")]
pub struct Cli {
    /// Worker threads for Monte-Carlo runs.
    #[arg(long, global = true, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Evaluate an analytic density on a grid.
    Density(DensityArgs),
    /// Sample matrices and histogram their spectra.
    Mc(McArgs),
    /// Compare a histogram with an analytic density.
    Compare(CompareArgs),
    /// Numerical checks of the integral identities.
    Identity(IdentityArgs),
    /// Outlier large-deviation and Gaussian profiles.
    Outlier(OutlierArgs),
    /// Re-run a saved configuration.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Ginue,
    Interp,
    GinoeComplex,
    GinoeReal,
    WeakNonreality,
    RankOneNormal,
    LimitingEigvec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormName {
    Integral,
    Closed,
    Both,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: ModelName,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Rank-one strength `re[,im]`.
    #[arg(long, value_parser = parse_complex_arg)]
    pub a: Option<Complex64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub xtilde: Option<f64>,
    #[arg(long, value_enum)]
    pub form: Option<FormName>,
    /// Point `re[,im]` at which the overlap law is evaluated.
    #[arg(long, value_parser = parse_complex_arg, allow_hyphen_values = true)]
    pub z: Option<Complex64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Overwrite existing outputs.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DensityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// `min:max:count` or `min:max:count x min:max:count`, inclusive endpoints.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    /// Fixed coordinate of a one-dimensional cut, `x=<v>` or `y=<v>`.
    #[arg(long, allow_hyphen_values = true)]
    pub slice: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EnsembleArgs {
    /// Interpolating ensemble parameter.
    #[arg(long, conflicts_with = "deform_a")]
    pub tau: Option<f64>,
    /// Rank-one normal deformation `a·e₁e₁*`, `re[,im]`.
    #[arg(long, value_parser = parse_complex_arg)]
    pub deform_a: Option<Complex64>,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub streams: u32,
}

impl EnsembleArgs {
    fn spec(&self) -> Result<EnsembleSpec> {
        let mut spec = match (self.tau, self.deform_a) {
            (Some(tau), None) => EnsembleSpec::interpolating(tau, self.n, self.samples, self.seed),
            (None, Some(a)) => {
                EnsembleSpec::deformed(Deformation::rank_one_normal(a, self.n), self.samples, self.seed)
            }
            _ => return Err(Error::domain("ensemble", "give exactly one of --tau or --deform-a")),
        };
        spec.streams = self.streams;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GridArgs {
    /// Eigenvalue histogram over `xmin:xmax:bins x ymin:ymax:bins`.
    #[arg(long, allow_hyphen_values = true)]
    pub hist2d: Option<String>,
    /// Im z histogram `ymin:ymax:bins` of a vertical strip.
    #[arg(long, allow_hyphen_values = true)]
    pub strip: Option<String>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub strip_x0: f64,
    #[arg(long, default_value_t = 0.1)]
    pub strip_half_width: f64,
    /// Apply the strip condition to `Re z/√N`.
    #[arg(long)]
    pub strip_scaled: bool,
    /// Real-axis detector half-width, or `auto`.
    #[arg(long)]
    pub real_detector: Option<String>,
    /// Histogram of `ũ = N|vᵀv|²` for `|z/√N − c| < r`, given as `cre,cim,r`.
    #[arg(long, allow_hyphen_values = true)]
    pub overlap_disc: Option<String>,
    #[arg(long, default_value = "0:10:40")]
    pub u_grid: String,
}

impl GridArgs {
    fn grids(&self, tau: Option<f64>) -> Result<Vec<(String, GridKind)>> {
        let mut out = Vec::new();
        if let Some(s) = &self.hist2d {
            let (x, y) = parse_axes2(s)?;
            out.push(("hist2d".into(), GridKind::Plane { x, y }));
        }
        if let Some(s) = &self.strip {
            out.push((
                "strip".into(),
                GridKind::Strip {
                    x0: self.strip_x0,
                    half_width: self.strip_half_width,
                    scaled_x: self.strip_scaled,
                    y: parse_axis(s)?,
                },
            ));
        }
        if let Some(s) = &self.real_detector {
            let kind = if s == "auto" {
                GridKind::real_axis_for_tau(tau.unwrap_or(0.0))
            } else {
                let hw: f64 = s
                    .parse()
                    .map_err(|_| Error::domain("real_detector", format!("not a number: {s}")))?;
                if !(hw > 0.0) {
                    return Err(Error::domain("real_detector", "half-width must be positive"));
                }
                GridKind::RealAxis { half_width: hw }
            };
            out.push(("real_axis".into(), kind));
        }
        if let Some(s) = &self.overlap_disc {
            let v = parse_list(s)?;
            if v.len() != 3 || !(v[2] > 0.0) {
                return Err(Error::domain("overlap_disc", "expected cre,cim,r with r > 0"));
            }
            out.push((
                "overlap".into(),
                GridKind::DiscOverlap {
                    center: Complex64::new(v[0], v[1]),
                    radius: v[2],
                    u: parse_axis(&self.u_grid)?,
                },
            ));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct McArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    pub grids: GridArgs,
    /// Also dump every eigenvalue record.
    #[arg(long)]
    pub records: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    /// Histogram JSON written by `mc`.
    #[arg(long)]
    pub hist: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.5)]
    pub chi2_min: f64,
    #[arg(long, default_value_t = 1.5)]
    pub chi2_max: f64,
    #[arg(long, default_value_t = 5.0)]
    pub max_abs_z: f64,
    #[arg(long, default_value_t = 20.0)]
    pub min_expected: f64,
    #[arg(long)]
    pub shape_normalized: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct IdentityArgs {
    #[command(subcommand)]
    pub check: IdentityCheck,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum IdentityCheck {
    SquaredDelta {
        #[arg(long, default_value = "z")]
        poly: String,
        #[arg(long, default_value = "1e-2,1e-3,1e-4")]
        eps: String,
        #[arg(long, default_value_t = 0.02)]
        rel_tol: f64,
    },
    SphereLemma {
        #[arg(long)]
        n: u32,
        /// `1`, `u` or `exp:<c>`.
        #[arg(long, default_value = "u")]
        f: String,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    QLaw {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        bins: usize,
    },
    IzhcN2 {
        #[arg(long, default_value_t = 0.5)]
        s1: f64,
        #[arg(long, default_value_t = 2.0)]
        s2: f64,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, default_value_t = 10_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Asymptotics {
        #[arg(long, default_value = "25,100,400,1600")]
        n_seq: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutlierMode {
    /// `ℱ(w)`; `NaN` outside `|w| > 1`, `Δ < −1`.
    RateMap,
    Profile,
    Overlap,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OutlierArgs {
    /// `re[,im]`.
    #[arg(long, value_parser = parse_complex_arg, allow_hyphen_values = true)]
    pub alpha: Complex64,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, value_enum)]
    pub mode: OutlierMode,
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub config: PathBuf,
    #[arg(long)]
    pub force: bool,
}

/// Saved configuration of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema: u32,
    pub version: String,
    pub workers: usize,
    #[serde(flatten)]
    pub command: Command,
}

fn parse_complex_arg(s: &str) -> std::result::Result<Complex64, String> {
    parse_complex(s).map_err(|e| e.to_string())
}

/// `re` or `re,im`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let v = parse_list(s)?;
    match v.as_slice() {
        [re] => Ok(Complex64::new(*re, 0.0)),
        [re, im] => Ok(Complex64::new(*re, *im)),
        _ => Err(Error::domain("complex", format!("expected re or re,im, got `{s}`"))),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::domain("list", format!("not a number: `{t}`")))
        })
        .collect()
}

fn strip_label(s: &str) -> &str {
    let t = s.trim();
    t.strip_prefix("x=").or_else(|| t.strip_prefix("y=")).unwrap_or(t)
}

fn split_triple(s: &str) -> Result<(f64, f64, usize)> {
    let t = strip_label(s);
    let parts: Vec<&str> = t.split(':').collect();
    let bad = || Error::domain("grid", format!("expected min:max:count, got `{s}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a = parts[0].parse::<f64>().map_err(|_| bad())?;
    let b = parts[1].parse::<f64>().map_err(|_| bad())?;
    let c = parts[2].parse::<usize>().map_err(|_| bad())?;
    Ok((a, b, c))
}

/// Histogram axis from `min:max:bins`.
pub fn parse_axis(s: &str) -> Result<Axis> {
    let (a, b, c) = split_triple(s)?;
    Axis::new(a, b, c)
}

fn split_pair(s: &str) -> Result<(&str, &str)> {
    s.split_once('x')
        .filter(|(a, _)| !a.trim().is_empty())
        .ok_or_else(|| Error::domain("grid", format!("expected two axes separated by `x`, got `{s}`")))
}

fn parse_axes2(s: &str) -> Result<(Axis, Axis)> {
    let (a, b) = split_pair(s)?;
    Ok((parse_axis(a)?, parse_axis(b)?))
}

/// Inclusive evaluation points `min:max:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Points {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Points {
    pub fn parse(s: &str) -> Result<Self> {
        let (min, max, count) = split_triple(s)?;
        if count == 0 || !(min.is_finite() && max.is_finite()) || (count > 1 && !(min < max)) {
            return Err(Error::domain("grid", format!("invalid point grid `{s}`")));
        }
        Ok(Points { min, max, count })
    }

    pub fn at(&self, i: usize) -> f64 {
        if self.count == 1 {
            self.min
        } else if i + 1 == self.count {
            self.max
        } else {
            let m = (self.count - 1) as f64;
            (self.min * (m - i as f64) + self.max * i as f64) / m
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.at(i))
    }
}

enum PointGrid {
    One(Points),
    Two(Points, Points),
}

fn parse_point_grid(s: &str) -> Result<PointGrid> {
    let t = s.trim();
    let two = t.contains('x') && !t.starts_with("x=");
    if two {
        let (a, b) = split_pair(t)?;
        Ok(PointGrid::Two(Points::parse(a)?, Points::parse(b)?))
    } else {
        Ok(PointGrid::One(Points::parse(t)?))
    }
}

fn create(path: &Path, force: bool) -> Result<BufWriter<fs::File>> {
    if path.exists() && !force {
        return Err(Error::Exists(path.display().to_string()));
    }
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn config_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T, force: bool) -> Result<()> {
    let mut w = create(path, force)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn need<T>(v: Option<T>, name: &'static str) -> Result<T> {
    v.ok_or_else(|| Error::domain(name, format!("--{} is required for this model", name.replace('_', "-"))))
}

fn quad() -> QuadSpec {
    QuadSpec::default()
}

/// Point-density evaluator for `density`; returns one or two value columns.
struct Evaluator {
    args: ModelArgs,
}

impl Evaluator {
    fn columns(&self) -> Vec<&'static str> {
        match (self.args.model, self.args.form) {
            (ModelName::WeakNonreality, Some(FormName::Both)) => vec!["integral", "closed"],
            _ => vec!["value"],
        }
    }

    fn weak_forms(&self) -> Vec<WeakForm> {
        match self.args.form.unwrap_or(FormName::Closed) {
            FormName::Integral => vec![WeakForm::Integral],
            FormName::Closed => vec![WeakForm::Closed],
            FormName::Both => vec![WeakForm::Integral, WeakForm::Closed],
        }
    }

    fn eval(&self, x: f64, y: f64) -> Result<Vec<f64>> {
        let a = &self.args;
        let z = Complex64::new(x, y);
        let v = match a.model {
            ModelName::Ginue => ginue_density(need(a.n, "n")?, z)?,
            ModelName::Interp => {
                mean_density_interpolating(InterpParams::new(need(a.tau, "tau")?, need(a.n, "n")?)?, z, &quad())?
            }
            ModelName::GinoeComplex => ginoe_complex_density(need(a.n, "n")?, z)?,
            ModelName::GinoeReal => ginoe_real_density(need(a.n, "n")?, x, &quad())?,
            ModelName::RankOneNormal => rank_one_normal_mean_density(need(a.a, "a")?, need(a.n, "n")? as usize, z)?,
            ModelName::WeakNonreality => {
                let p = WeakNonRealityParams::new(need(a.delta, "delta")?, a.xtilde.unwrap_or(0.0))?;
                return self
                    .weak_forms()
                    .into_iter()
                    .map(|f| weak_nonreality_density_with(p, y, f, &quad()))
                    .collect();
            }
            ModelName::LimitingEigvec => limiting_eigvec_jpd(need(a.tau, "tau")?, need(a.z, "z")?, x)?,
        };
        Ok(vec![v])
    }
}

fn cmd_density(args: &DensityArgs) -> Result<i32> {
    let ev = Evaluator { args: args.model.clone() };
    let mut w = create(&args.output.out, args.output.force)?;
    let cols = ev.columns().join(",");
    let one_d = |w: &mut BufWriter<fs::File>, pts: Points, to_xy: &dyn Fn(f64) -> (f64, f64)| -> Result<()> {
        writeln!(w, "coord,{cols}")?;
        for c in pts.iter() {
            let (x, y) = to_xy(c);
            let vals = ev.eval(x, y)?;
            let vs: Vec<String> = vals.into_iter().map(fmt_f).collect();
            writeln!(w, "{},{}", fmt_f(c), vs.join(","))?;
        }
        Ok(())
    };
    match parse_point_grid(&args.grid)? {
        PointGrid::Two(px, py) => {
            writeln!(w, "x,y,{cols}")?;
            for x in px.iter() {
                for y in py.iter() {
                    let vs: Vec<String> = ev.eval(x, y)?.into_iter().map(fmt_f).collect();
                    writeln!(w, "{},{},{}", fmt_f(x), fmt_f(y), vs.join(","))?;
                }
            }
        }
        PointGrid::One(p) => {
            let slice = args.slice.as_deref().map(str::trim);
            match (args.model.model, slice) {
                (_, Some(s)) if s.starts_with("x=") => {
                    let x0: f64 = s[2..].parse().map_err(|_| Error::domain("slice", format!("bad slice `{s}`")))?;
                    one_d(&mut w, p, &|c| (x0, c))?
                }
                (_, Some(s)) if s.starts_with("y=") => {
                    let y0: f64 = s[2..].parse().map_err(|_| Error::domain("slice", format!("bad slice `{s}`")))?;
                    one_d(&mut w, p, &|c| (c, y0))?
                }
                (_, Some(s)) => return Err(Error::domain("slice", format!("expected x=<v> or y=<v>, got `{s}`"))),
                (ModelName::WeakNonreality, None) => one_d(&mut w, p, &|c| (0.0, c))?,
                (_, None) => one_d(&mut w, p, &|c| (c, 0.0))?,
            }
        }
    }
    w.flush()?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct McSummaryOut<'a> {
    schema: u32,
    seed: u64,
    samples: u64,
    streams: u32,
    summary: &'a crate::ensemble::McSummary,
    grids: Vec<serde_json::Value>,
}

fn cmd_mc(args: &McArgs, workers: usize) -> Result<i32> {
    let spec = args.ensemble.spec()?;
    let named = args.grids.grids(args.ensemble.tau)?;
    let dir = &args.out;
    let mut targets: Vec<PathBuf> = vec![dir.join("summary.json"), dir.join("config.json")];
    for (name, _) in &named {
        targets.push(dir.join(format!("{name}.csv")));
        targets.push(dir.join(format!("{name}.json")));
    }
    if args.records {
        targets.push(dir.join("records.csv"));
    }
    if !args.force {
        if let Some(p) = targets.iter().find(|p| p.exists()) {
            return Err(Error::Exists(p.display().to_string()));
        }
    }
    let kinds: Vec<GridKind> = named.iter().map(|(_, k)| k.clone()).collect();
    let opts = McOptions {
        workers,
        keep_records: args.records,
        ..McOptions::default()
    };
    let out = run_mc(&spec, None, &kinds, &opts)?;
    fs::create_dir_all(dir)?;
    let mut grid_info = Vec::new();
    for ((name, _), grid) in named.iter().zip(&out.grids) {
        let mut w = create(&dir.join(format!("{name}.csv")), true)?;
        grid.write_csv(&mut w)?;
        w.flush()?;
        write_json(&dir.join(format!("{name}.json")), grid, true)?;
        grid_info.push(json!({
            "name": name,
            "total": grid.total(),
            "mass": grid.total() + grid.overflow,
            "overflow": grid.overflow,
            "mean_per_matrix": grid.total() as f64 / grid.n_matrices.max(1) as f64,
            "kind": grid.kind,
        }));
    }
    if let Some(recs) = &out.records {
        let mut w = create(&dir.join("records.csv"), true)?;
        write_records_csv(&mut w, recs)?;
        w.flush()?;
    }
    let summary = McSummaryOut {
        schema: 1,
        seed: spec.seed,
        samples: spec.samples,
        streams: spec.streams,
        summary: &out.summary,
        grids: grid_info,
    };
    write_json(&dir.join("summary.json"), &summary, true)?;
    Ok(0)
}

fn model_of(m: &ModelArgs) -> Result<DensityModel> {
    Ok(match m.model {
        ModelName::Ginue => DensityModel::Ginue { n: need(m.n, "n")? },
        ModelName::Interp => DensityModel::Interpolating {
            tau: need(m.tau, "tau")?,
            n: need(m.n, "n")?,
        },
        ModelName::GinoeComplex => DensityModel::GinoeComplex { n: need(m.n, "n")? },
        ModelName::GinoeReal => DensityModel::GinoeReal { n: need(m.n, "n")? },
        ModelName::WeakNonreality => DensityModel::WeakNonReality {
            delta: need(m.delta, "delta")?,
            form: match m.form.unwrap_or(FormName::Closed) {
                FormName::Integral => WeakForm::Integral,
                FormName::Closed => WeakForm::Closed,
                FormName::Both => return Err(Error::domain("form", "pick one form for a comparison")),
            },
        },
        ModelName::RankOneNormal => DensityModel::RankOneNormal {
            a: need(m.a, "a")?,
            n: need(m.n, "n")?,
        },
        ModelName::LimitingEigvec => DensityModel::LimitingEigvec { tau: need(m.tau, "tau")? },
    })
}

fn cmd_compare(args: &CompareArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.hist)?;
    let grid: HistogramGrid = serde_json::from_str(&text)?;
    let model = model_of(&args.model)?;
    let th = Thresholds {
        chi2_min: args.chi2_min,
        chi2_max: args.chi2_max,
        max_abs_z: args.max_abs_z,
        min_expected: args.min_expected,
        shape_normalized: args.shape_normalized,
    };
    let rep = compare_density(&grid, &model, &quad(), &th)?.to_report("compare_density");
    write_json(&args.output.out, &rep, args.output.force)?;
    Ok(exit_for(rep.verdict))
}

fn exit_for(v: Verdict) -> i32 {
    if v.passed() {
        0
    } else {
        1
    }
}

fn parse_u32_list(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::domain("list", format!("not an integer: `{t}`")))
        })
        .collect()
}

fn cmd_identity(args: &IdentityArgs) -> Result<i32> {
    let rep: Report = match &args.check {
        IdentityCheck::SquaredDelta { poly, eps, rel_tol } => {
            let p = Polynomial::parse(poly)?;
            let eps = parse_list(eps)?;
            let t = check_squared_delta(&p, |z| (-z.norm_sqr()).exp(), &eps, &quad())?;
            t.to_report(poly, *rel_tol)
        }
        IdentityCheck::SphereLemma { n, f, samples, seed } => {
            let sf = SphereFn::parse(f)?;
            check_sphere_lemma(&sf.label(), |u| sf.eval(u), *n, *samples, *seed)?.to_report("sphere_lemma")
        }
        IdentityCheck::QLaw { n, samples, seed, bins } => check_q_law(*n, *samples, *seed, *bins)?.to_report(),
        IdentityCheck::IzhcN2 {
            s1,
            s2,
            eps,
            samples,
            seed,
        } => check_izhc_n2(*s1, *s2, *eps, *samples, *seed)?.to_report("izhc_n2"),
        IdentityCheck::Asymptotics { n_seq } => check_asymptotics(&parse_u32_list(n_seq)?)?.to_report(),
    };
    match &args.out {
        Some(p) => write_json(p, &rep, args.force)?,
        None => println!("{}", rep.to_json()?),
    }
    Ok(exit_for(rep.verdict))
}

fn cmd_outlier(args: &OutlierArgs) -> Result<i32> {
    let alpha = args.alpha;
    let sigma = outlier_sigma(alpha)?;
    let n = args.n;
    if n < 2 {
        return Err(Error::domain("n", "must be >= 2"));
    }
    let mut w = create(&args.output.out, args.output.force)?;
    match args.mode {
        OutlierMode::RateMap | OutlierMode::Profile => {
            let default = if args.mode == OutlierMode::RateMap {
                "-3:3:121x-3:3:121".to_string()
            } else {
                let h = 5.0 * (sigma / n as f64).sqrt();
                format!(
                    "{}:{}:81x{}:{}:81",
                    alpha.re - h,
                    alpha.re + h,
                    alpha.im - h,
                    alpha.im + h
                )
            };
            let g = args.grid.clone().unwrap_or(default);
            let PointGrid::Two(px, py) = parse_point_grid(&g)? else {
                return Err(Error::domain("grid", "this mode needs a two-dimensional grid"));
            };
            writeln!(w, "x,y,value")?;
            for x in px.iter() {
                for y in py.iter() {
                    let wz = Complex64::new(x, y);
                    let v = if args.mode == OutlierMode::RateMap {
                        let op = OutlierParams::new(alpha, wz);
                        if wz.norm() > 1.0 && op.delta_cap < -1.0 {
                            outlier_rate(op)?
                        } else {
                            f64::NAN
                        }
                    } else {
                        outlier_gaussian_profile(alpha, n, wz)?
                    };
                    writeln!(w, "{},{},{}", fmt_f(x), fmt_f(y), fmt_f(v))?;
                }
            }
        }
        OutlierMode::Overlap => {
            let g = args.grid.clone().unwrap_or_else(|| "0:0.99:100".into());
            let PointGrid::One(p) = parse_point_grid(&g)? else {
                return Err(Error::domain("grid", "overlap mode needs a one-dimensional grid"));
            };
            writeln!(w, "coord,value")?;
            for q in p.iter() {
                writeln!(w, "{},{}", fmt_f(q), fmt_f(overlap_ld_rate(alpha, q)?))?;
            }
        }
    }
    w.flush()?;
    Ok(0)
}

fn outputs_of(cmd: &Command) -> Option<(PathBuf, bool)> {
    match cmd {
        Command::Density(a) => Some((config_path(&a.output.out), a.output.force)),
        Command::Mc(a) => Some((a.out.join("config.json"), a.force)),
        Command::Compare(a) => Some((config_path(&a.output.out), a.output.force)),
        Command::Identity(a) => a.out.as_ref().map(|o| (config_path(o), a.force)),
        Command::Outlier(a) => Some((config_path(&a.output.out), a.output.force)),
        Command::Replay(_) => None,
    }
}

fn set_force(cmd: &mut Command, force: bool) {
    match cmd {
        Command::Density(a) => a.output.force |= force,
        Command::Mc(a) => a.force |= force,
        Command::Compare(a) => a.output.force |= force,
        Command::Identity(a) => a.force |= force,
        Command::Outlier(a) => a.output.force |= force,
        Command::Replay(_) => {}
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn execute(cmd: &Command, workers: usize) -> Result<i32> {
    let code = match cmd {
        Command::Density(a) => cmd_density(a)?,
        Command::Mc(a) => cmd_mc(a, workers)?,
        Command::Compare(a) => cmd_compare(a)?,
        Command::Identity(a) => cmd_identity(a)?,
        Command::Outlier(a) => cmd_outlier(a)?,
        Command::Replay(r) => {
            let text = fs::read_to_string(&r.config)?;
            let cfg: RunConfig = serde_json::from_str(&text)?;
            let mut inner = cfg.command;
            if matches!(inner, Command::Replay(_)) {
                return Err(Error::domain("config", "a replay cannot replay itself"));
            }
            set_force(&mut inner, r.force);
            return execute(&inner, workers);
        }
    };
    if let Some((path, force)) = outputs_of(cmd) {
        let cfg = RunConfig {
            schema: 1,
            version: env!("CARGO_PKG_VERSION").to_string(),
            workers,
            command: cmd.clone(),
        };
        write_json(&path, &cfg, force || matches!(cmd, Command::Mc(_)))?;
    }
    Ok(code)
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let workers = cli.workers.unwrap_or_else(default_workers).max(1);
    match execute(&cli.command, workers) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        let a = parse_axis("-4:4:80").unwrap();
        assert_eq!((a.min, a.max, a.bins), (-4.0, 4.0, 80));
        let (x, y) = parse_axes2("-4:4:80x-3:3:60").unwrap();
        assert_eq!((x.bins, y.min), (80, -3.0));
        assert!(parse_axis("1:0:3").is_err());
        assert!(parse_axis("0:1").is_err());
        let p = Points::parse("y=-2:2:401").unwrap();
        assert_eq!(p.at(0), -2.0);
        assert_eq!(p.at(400), 2.0);
        assert_eq!(p.at(200), 0.0);
        assert!(matches!(parse_point_grid("-4:4:3x-4:4:5").unwrap(), PointGrid::Two(_, _)));
        assert!(matches!(parse_point_grid("x=-4:4:3").unwrap(), PointGrid::One(_)));
    }

    #[test]
    fn complex_syntax() {
        assert_eq!(parse_complex("1.5").unwrap(), Complex64::new(1.5, 0.0));
        assert_eq!(parse_complex("1,-2").unwrap(), Complex64::new(1.0, -2.0));
        assert!(parse_complex("1,2,3").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["ginibre-jpd", "density"]), 2);
        assert_eq!(run(["ginibre-jpd", "bogus"]), 2);
    }

    #[test]
    fn config_round_trip() {
        let cli = Cli::try_parse_from([
            "ginibre-jpd",
            "outlier",
            "--alpha",
            "1.5",
            "--mode",
            "overlap",
            "--out",
            "x.csv",
        ])
        .unwrap();
        let cfg = RunConfig {
            schema: 1,
            version: "0".into(),
            workers: 1,
            command: cli.command,
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}

//! C ABI for `ginibre-jpd`.
//!
//! Every function returns a [`GjpdStatus`] and writes results through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`gjpd_last_error`]. Ensembles, histograms and models are opaque handles
//! created by `*_new_*` functions and released by the matching `*_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ginibre_jpd::deform::{outlier_rate, rank_one_normal_mean_density, Deformation, OutlierParams};
use ginibre_jpd::ensemble::{run_mc, Axis, EnsembleSpec, GridKind, HistogramGrid, McOptions};
use ginibre_jpd::interp::{
    ginoe_complex_density, ginoe_real_density, ginue_density, jpd_interpolating, limiting_eigvec_jpd,
    mean_density_interpolating, weak_nonreality_density, InterpParams, OverlapValue, WeakForm, WeakNonRealityParams,
};
use ginibre_jpd::quad::QuadSpec;
use ginibre_jpd::specfn::{erfcx, regularized_gamma_upper};
use ginibre_jpd::verify::{compare_density, DensityModel, Thresholds};
use ginibre_jpd::{Complex64, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GjpdStatus {
    Ok = 0,
    Domain = 1,
    Dimension = 2,
    Singular = 3,
    Numerical = 4,
    Io = 5,
    NullPointer = 6,
    EmptyGrid = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> GjpdStatus {
    match e {
        Error::Domain { .. } | Error::Normalization(_) => GjpdStatus::Domain,
        Error::Dimension { .. } => GjpdStatus::Dimension,
        Error::Singular(_) => GjpdStatus::Singular,
        Error::EmptyGrid => GjpdStatus::EmptyGrid,
        Error::Io(_) | Error::Json(_) | Error::Exists(_) => GjpdStatus::Io,
        Error::ModelBin { source, .. } => status_of(source),
        _ => GjpdStatus::Numerical,
    }
}

fn guard<F>(f: F) -> GjpdStatus
where
    F: FnOnce() -> Result<(), Error>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GjpdStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            GjpdStatus::Panic
        }
    }
}

fn null() -> GjpdStatus {
    set_error("null pointer argument".into());
    GjpdStatus::NullPointer
}

unsafe fn write_out<T>(out: *mut T, f: impl FnOnce() -> Result<T, Error>) -> GjpdStatus {
    if out.is_null() {
        return null();
    }
    guard(|| {
        let v = f()?;
        unsafe { out.write(v) };
        Ok(())
    })
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length in bytes.
#[no_mangle]
pub unsafe extern "C" fn gjpd_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, k);
                *buf.add(k) = 0;
            }
        }
        bytes.len()
    })
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_regularized_gamma_upper(n: u32, a: f64, out: *mut f64) -> GjpdStatus {
    write_out(out, || regularized_gamma_upper(n, a))
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_erfcx(s: f64, out: *mut f64) -> GjpdStatus {
    write_out(out, || erfcx(s))
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_ginue_density(n: u32, re: f64, im: f64, out: *mut f64) -> GjpdStatus {
    write_out(out, || ginue_density(n, Complex64::new(re, im)))
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_ginoe_complex_density(n: u32, re: f64, im: f64, out: *mut f64) -> GjpdStatus {
    write_out(out, || ginoe_complex_density(n, Complex64::new(re, im)))
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_ginoe_real_density(n: u32, x: f64, out: *mut f64) -> GjpdStatus {
    write_out(out, || ginoe_real_density(n, x, &QuadSpec::default()))
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_jpd_interpolating(
    tau: f64,
    n: u32,
    re: f64,
    im: f64,
    u: f64,
    out: *mut f64,
) -> GjpdStatus {
    write_out(out, || {
        jpd_interpolating(InterpParams::new(tau, n)?, Complex64::new(re, im), OverlapValue::raw(u))
    })
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_mean_density_interpolating(
    tau: f64,
    n: u32,
    re: f64,
    im: f64,
    out: *mut f64,
) -> GjpdStatus {
    write_out(out, || {
        mean_density_interpolating(InterpParams::new(tau, n)?, Complex64::new(re, im), &QuadSpec::default())
    })
}

/// `closed_form` selects the erfcx form (non-zero) or the integral form (zero).
#[no_mangle]
pub unsafe extern "C" fn gjpd_weak_nonreality_density(
    delta: f64,
    x_tilde: f64,
    y: f64,
    closed_form: c_int,
    out: *mut f64,
) -> GjpdStatus {
    let form = if closed_form != 0 { WeakForm::Closed } else { WeakForm::Integral };
    write_out(out, || weak_nonreality_density(WeakNonRealityParams::new(delta, x_tilde)?, y, form))
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_limiting_eigvec_jpd(
    tau: f64,
    re: f64,
    im: f64,
    u_tilde: f64,
    out: *mut f64,
) -> GjpdStatus {
    write_out(out, || limiting_eigvec_jpd(tau, Complex64::new(re, im), u_tilde))
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_rank_one_normal_mean_density(
    a_re: f64,
    a_im: f64,
    n: u32,
    re: f64,
    im: f64,
    out: *mut f64,
) -> GjpdStatus {
    write_out(out, || {
        rank_one_normal_mean_density(Complex64::new(a_re, a_im), n as usize, Complex64::new(re, im))
    })
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_outlier_rate(
    alpha_re: f64,
    alpha_im: f64,
    w_re: f64,
    w_im: f64,
    out: *mut f64,
) -> GjpdStatus {
    write_out(out, || {
        outlier_rate(OutlierParams::new(Complex64::new(alpha_re, alpha_im), Complex64::new(w_re, w_im)))
    })
}

/// Opaque ensemble description.
pub struct GjpdEnsemble(EnsembleSpec);

/// Opaque histogram.
pub struct GjpdHistogram(HistogramGrid);

/// Opaque analytic density model.
pub struct GjpdModel(DensityModel);

unsafe fn new_handle<T>(out: *mut *mut T, f: impl FnOnce() -> Result<T, Error>) -> GjpdStatus {
    if out.is_null() {
        return null();
    }
    guard(|| {
        let h = Box::into_raw(Box::new(f()?));
        unsafe { out.write(h) };
        Ok(())
    })
}

unsafe fn free_handle<T>(h: *mut T) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_ensemble_new_interpolating(
    tau: f64,
    n: usize,
    samples: u64,
    seed: u64,
    streams: u32,
    out: *mut *mut GjpdEnsemble,
) -> GjpdStatus {
    new_handle(out, || {
        let mut s = EnsembleSpec::interpolating(tau, n, samples, seed);
        s.streams = streams;
        s.validate()?;
        Ok(GjpdEnsemble(s))
    })
}

/// Deformed ensemble `G + a·e₁e₁*`.
#[no_mangle]
pub unsafe extern "C" fn gjpd_ensemble_new_rank_one_normal(
    a_re: f64,
    a_im: f64,
    n: usize,
    samples: u64,
    seed: u64,
    streams: u32,
    out: *mut *mut GjpdEnsemble,
) -> GjpdStatus {
    new_handle(out, || {
        let d = Deformation::rank_one_normal(Complex64::new(a_re, a_im), n);
        let mut s = EnsembleSpec::deformed(d, samples, seed);
        s.streams = streams;
        s.validate()?;
        Ok(GjpdEnsemble(s))
    })
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_ensemble_free(h: *mut GjpdEnsemble) {
    free_handle(h)
}

/// Eigenvalue histogram over `[x_min, x_max) × [y_min, y_max)` for matrices of size `n`.
#[no_mangle]
pub unsafe extern "C" fn gjpd_histogram_new_plane(
    x_min: f64,
    x_max: f64,
    x_bins: usize,
    y_min: f64,
    y_max: f64,
    y_bins: usize,
    n: usize,
    out: *mut *mut GjpdHistogram,
) -> GjpdStatus {
    new_handle(out, || {
        let kind = GridKind::Plane {
            x: Axis::new(x_min, x_max, x_bins)?,
            y: Axis::new(y_min, y_max, y_bins)?,
        };
        Ok(GjpdHistogram(HistogramGrid::new(kind, n)))
    })
}

/// `Im z` histogram of eigenvalues with `|x − x0| < half_width`
/// (`x = Re z/√N` when `scaled_x` is non-zero).
#[no_mangle]
pub unsafe extern "C" fn gjpd_histogram_new_strip(
    x0: f64,
    half_width: f64,
    scaled_x: c_int,
    y_min: f64,
    y_max: f64,
    y_bins: usize,
    n: usize,
    out: *mut *mut GjpdHistogram,
) -> GjpdStatus {
    new_handle(out, || {
        if !(half_width > 0.0) {
            return Err(Error::Domain {
                param: "half_width",
                detail: "must be positive".into(),
            });
        }
        let kind = GridKind::Strip {
            x0,
            half_width,
            scaled_x: scaled_x != 0,
            y: Axis::new(y_min, y_max, y_bins)?,
        };
        Ok(GjpdHistogram(HistogramGrid::new(kind, n)))
    })
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_histogram_free(h: *mut GjpdHistogram) {
    free_handle(h)
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_histogram_len(h: *const GjpdHistogram) -> usize {
    unsafe { h.as_ref() }.map_or(0, |h| h.0.counts.len())
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_histogram_n_matrices(h: *const GjpdHistogram) -> u64 {
    unsafe { h.as_ref() }.map_or(0, |h| h.0.n_matrices)
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_histogram_overflow(h: *const GjpdHistogram) -> u64 {
    unsafe { h.as_ref() }.map_or(0, |h| h.0.overflow)
}

/// Copies the bin counts into `buf`, which must hold `gjpd_histogram_len(h)` values.
#[no_mangle]
pub unsafe extern "C" fn gjpd_histogram_counts(h: *const GjpdHistogram, buf: *mut u64, len: usize) -> GjpdStatus {
    let (Some(h), false) = (unsafe { h.as_ref() }, buf.is_null()) else {
        return null();
    };
    let c = &h.0.counts;
    if len < c.len() {
        set_error(format!("buffer holds {len} values, histogram has {}", c.len()));
        return GjpdStatus::Dimension;
    }
    unsafe { ptr::copy_nonoverlapping(c.as_ptr(), buf, c.len()) };
    GjpdStatus::Ok
}

/// Samples the ensemble and replaces the contents of `hist`.
#[no_mangle]
pub unsafe extern "C" fn gjpd_run_mc(e: *const GjpdEnsemble, hist: *mut GjpdHistogram, workers: usize) -> GjpdStatus {
    let (Some(e), Some(h)) = (unsafe { e.as_ref() }, unsafe { hist.as_mut() }) else {
        return null();
    };
    guard(|| {
        if h.0.n != e.0.n {
            return Err(Error::Dimension {
                expected: e.0.n,
                got: h.0.n,
            });
        }
        let opts = McOptions {
            workers: workers.max(1),
            ..McOptions::default()
        };
        let mut out = run_mc(&e.0, None, &[h.0.kind.clone()], &opts)?;
        h.0 = out.grids.remove(0);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_model_new_ginue(n: u32, out: *mut *mut GjpdModel) -> GjpdStatus {
    new_handle(out, || Ok(GjpdModel(DensityModel::Ginue { n })))
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_model_new_interpolating(tau: f64, n: u32, out: *mut *mut GjpdModel) -> GjpdStatus {
    new_handle(out, || {
        InterpParams::new(tau, n)?;
        Ok(GjpdModel(DensityModel::Interpolating { tau, n }))
    })
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_model_new_rank_one_normal(
    a_re: f64,
    a_im: f64,
    n: u32,
    out: *mut *mut GjpdModel,
) -> GjpdStatus {
    new_handle(out, || {
        Ok(GjpdModel(DensityModel::RankOneNormal {
            a: Complex64::new(a_re, a_im),
            n,
        }))
    })
}

/// Weak non-reality limit; pair it with a scaled strip histogram.
#[no_mangle]
pub unsafe extern "C" fn gjpd_model_new_weak_nonreality(delta: f64, out: *mut *mut GjpdModel) -> GjpdStatus {
    new_handle(out, || {
        Ok(GjpdModel(DensityModel::WeakNonReality {
            delta,
            form: WeakForm::Closed,
        }))
    })
}

#[no_mangle]
pub unsafe extern "C" fn gjpd_model_free(h: *mut GjpdModel) {
    free_handle(h)
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GjpdComparison {
    pub chi2_per_dof: f64,
    pub max_abs_z: f64,
    pub total_mass_ratio: f64,
    pub n_effective_bins: usize,
    /// 1 when the default verdict (χ²/dof in [0.5, 1.5], max |z| ≤ 5) passes.
    pub passed: c_int,
}

/// Poisson comparison of a filled histogram with a model at the default thresholds.
#[no_mangle]
pub unsafe extern "C" fn gjpd_compare(
    hist: *const GjpdHistogram,
    model: *const GjpdModel,
    out: *mut GjpdComparison,
) -> GjpdStatus {
    let (Some(h), Some(m)) = (unsafe { hist.as_ref() }, unsafe { model.as_ref() }) else {
        return null();
    };
    write_out(out, || {
        let r = compare_density(&h.0, &m.0, &QuadSpec::default(), &Thresholds::default())?;
        Ok(GjpdComparison {
            chi2_per_dof: r.chi2_per_dof,
            max_abs_z: r.max_abs_z,
            total_mass_ratio: r.total_mass_ratio,
            n_effective_bins: r.n_effective_bins,
            passed: r.verdict.passed() as c_int,
        })
    })
}

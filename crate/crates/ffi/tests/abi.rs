use std::ffi::{c_char, CStr};
use std::path::Path;
use std::process::Command;
use std::ptr;

use ginibre_jpd_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    let n = unsafe { gjpd_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn scalar_densities() {
    let mut v = 0.0;
    assert_eq!(unsafe { gjpd_ginue_density(8, 0.0, 0.0, &mut v) }, GjpdStatus::Ok);
    assert!((v - std::f64::consts::FRAC_1_PI).abs() < 1e-15);
    assert_eq!(unsafe { gjpd_regularized_gamma_upper(3, 0.0, &mut v) }, GjpdStatus::Ok);
    assert_eq!(v, 1.0);
    assert_eq!(unsafe { gjpd_erfcx(0.0, &mut v) }, GjpdStatus::Ok);
    assert!((v - 1.0).abs() < 1e-15);
    let (mut a, mut b) = (0.0, 0.0);
    assert_eq!(unsafe { gjpd_weak_nonreality_density(1.0, 0.0, 0.3, 0, &mut a) }, GjpdStatus::Ok);
    assert_eq!(unsafe { gjpd_weak_nonreality_density(1.0, 0.0, 0.3, 1, &mut b) }, GjpdStatus::Ok);
    assert!((a - b).abs() < 1e-10);
    assert_eq!(unsafe { gjpd_outlier_rate(1.5, 0.0, 1.5, 0.0, &mut v) }, GjpdStatus::Ok);
    assert!(v.abs() < 1e-14);
    assert_eq!(unsafe { gjpd_mean_density_interpolating(0.5, 4, 0.3, 0.2, &mut v) }, GjpdStatus::Ok);
    assert!(v > 0.0);
}

#[test]
fn domain_errors_report_a_message() {
    let mut v = 0.0;
    let s = unsafe { gjpd_mean_density_interpolating(1.0, 4, 0.3, 0.2, &mut v) };
    assert_eq!(s, GjpdStatus::Domain);
    assert!(last_error().contains("tau"));
    assert_eq!(unsafe { gjpd_ginue_density(8, 0.0, 0.0, ptr::null_mut()) }, GjpdStatus::NullPointer);
    let s = unsafe { gjpd_outlier_rate(0.5, 0.0, 0.5, 0.0, &mut v) };
    assert_eq!(s, GjpdStatus::Domain);
}

#[test]
fn last_error_truncates() {
    let mut v = 0.0;
    unsafe { gjpd_limiting_eigvec_jpd(2.0, 0.0, 0.0, 1.0, &mut v) };
    let mut buf = [1 as c_char; 4];
    let n = unsafe { gjpd_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 3);
    assert_eq!(buf[3], 0);
}

#[test]
fn monte_carlo_round_trip() {
    let mut e = ptr::null_mut();
    let mut h = ptr::null_mut();
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(gjpd_ensemble_new_interpolating(0.0, 4, 3000, 11, 16, &mut e), GjpdStatus::Ok);
        assert_eq!(gjpd_histogram_new_plane(-3.0, 3.0, 10, -3.0, 3.0, 10, 4, &mut h), GjpdStatus::Ok);
        assert_eq!(gjpd_model_new_ginue(4, &mut m), GjpdStatus::Ok);
        assert_eq!(gjpd_run_mc(e, h, 2), GjpdStatus::Ok);
        assert_eq!(gjpd_histogram_n_matrices(h), 3000);
        let len = gjpd_histogram_len(h);
        assert_eq!(len, 100);
        let mut counts = vec![0u64; len];
        assert_eq!(gjpd_histogram_counts(h, counts.as_mut_ptr(), len), GjpdStatus::Ok);
        assert_eq!(counts.iter().sum::<u64>() + gjpd_histogram_overflow(h), 12000);
        assert_eq!(gjpd_histogram_counts(h, counts.as_mut_ptr(), 3), GjpdStatus::Dimension);
        let mut c = GjpdComparison::default();
        assert_eq!(gjpd_compare(h, m, &mut c), GjpdStatus::Ok);
        assert_eq!(c.passed, 1, "{c:?}");
        gjpd_model_free(m);
        gjpd_histogram_free(h);
        gjpd_ensemble_free(e);
    }
}

#[test]
fn mismatched_sizes_and_empty_grids() {
    let mut e = ptr::null_mut();
    let mut h = ptr::null_mut();
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(gjpd_ensemble_new_rank_one_normal(1.0, 0.0, 4, 10, 1, 4, &mut e), GjpdStatus::Ok);
        assert_eq!(gjpd_histogram_new_strip(0.0, 0.5, 1, -2.0, 2.0, 8, 6, &mut h), GjpdStatus::Ok);
        assert_eq!(gjpd_run_mc(e, h, 1), GjpdStatus::Dimension);
        assert_eq!(gjpd_model_new_weak_nonreality(1.0, &mut m), GjpdStatus::Ok);
        let mut c = GjpdComparison::default();
        assert_eq!(gjpd_compare(h, m, &mut c), GjpdStatus::EmptyGrid);
        assert_eq!(gjpd_ensemble_new_interpolating(0.5, 1, 10, 0, 1, &mut e), GjpdStatus::Domain);
        gjpd_model_free(m);
        gjpd_histogram_free(h);
        gjpd_ensemble_free(e);
        gjpd_ensemble_free(ptr::null_mut());
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ginibre_jpd.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["gjpd_run_mc", "gjpd_compare", "gjpd_last_error", "GJPD_STATUS_NULL_POINTER"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99"]).arg(&header).output() else {
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

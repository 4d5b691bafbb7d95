//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line.

use std::f64::consts::{PI, SQRT_2};
use std::time::Instant;

use ginibre_jpd::deform::{
    hikami_pnini_density, jpd_additive, outlier_sigma, overlap_typical, rank_one_jpd, Deformation, Stencil,
    UnitVector,
};
use ginibre_jpd::ensemble::{
    haar_vector, map_matrices, matrix_rng, normal_pair, run_mc, Axis, EnsembleSpec, GridKind, HistogramGrid,
    McOptions,
};
use ginibre_jpd::interp::{
    ginoe_complex_density, ginoe_real_density, mean_density_interpolating, weak_nonreality_density, InterpParams,
    WeakForm, WeakNonRealityParams,
};
use ginibre_jpd::linalg::cdot;
use ginibre_jpd::quad::{try_integrate_semi_infinite, QuadSpec};
use ginibre_jpd::verify::{
    check_asymptotics, check_izhc_n2, check_q_law, check_sphere_lemma, check_squared_delta, compare_density,
    l1_distance, DensityModel, Polynomial, Thresholds,
};
use ginibre_jpd::Complex64;

fn verdict(id: u32, ok: bool, detail: String, t0: Instant) {
    println!(
        "criterion {id}: {}  {detail}  ({:.1} s)",
        if ok { "PASS" } else { "FAIL" },
        t0.elapsed().as_secs_f64()
    );
    assert!(ok, "criterion {id} failed: {detail}");
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn opts() -> McOptions {
    McOptions {
        workers: workers(),
        ..McOptions::default()
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ginue_grid() -> GridKind {
    GridKind::Plane {
        x: Axis::new(-4.0, 4.0, 80).unwrap(),
        y: Axis::new(-4.0, 4.0, 80).unwrap(),
    }
}

fn csv(grid: &HistogramGrid) -> Vec<u8> {
    let mut buf = Vec::new();
    grid.write_csv(&mut buf).unwrap();
    buf
}

#[test]
fn criterion_01_ginue_exactness() {
    let t0 = Instant::now();
    let spec = EnsembleSpec::interpolating(0.0, 8, 20_000, 101);
    let out = run_mc(&spec, None, &[ginue_grid()], &opts()).unwrap();
    let r = compare_density(&out.grids[0], &DensityModel::Ginue { n: 8 }, &QuadSpec::default(), &Thresholds::default())
        .unwrap();
    verdict(
        1,
        r.verdict.passed() && out.summary.mass_conserved,
        format!("chi2/dof={:.3} max|z|={:.2} bins={}", r.chi2_per_dof, r.max_abs_z, r.n_effective_bins),
        t0,
    );
}

#[test]
fn criterion_02_interpolating_density() {
    let t0 = Instant::now();
    let spec = EnsembleSpec::interpolating(0.9, 16, 20_000, 102);
    let grid = GridKind::Strip {
        x0: 0.0,
        half_width: 0.1,
        scaled_x: false,
        y: Axis::new(-1.5, 1.5, 61).unwrap(),
    };
    let out = run_mc(&spec, None, &[grid], &opts()).unwrap();
    let model = DensityModel::Interpolating { tau: 0.9, n: 16 };
    let r = compare_density(&out.grids[0], &model, &QuadSpec::default(), &Thresholds::default()).unwrap();
    verdict(
        2,
        r.verdict.passed(),
        format!("chi2/dof={:.3} max|z|={:.2} bins={}", r.chi2_per_dof, r.max_abs_z, r.n_effective_bins),
        t0,
    );
}

#[test]
fn criterion_03_real_limit_of_interpolating_density() {
    let t0 = Instant::now();
    let n = 8;
    let p = InterpParams::new(1.0 - 1e-8, n).unwrap();
    let q = QuadSpec::default();
    let mut worst: f64 = 0.0;
    for i in 0..21 {
        for j in 0..21 {
            let x = -2.0 + 0.2 * i as f64;
            let y = -2.0 + 0.2 * j as f64;
            if y.abs() < 0.05 {
                continue;
            }
            let z = c(x, y);
            let a = mean_density_interpolating(p, z, &q).unwrap();
            let b = ginoe_complex_density(n, z).unwrap();
            worst = worst.max((a - b).abs() / b);
        }
    }
    verdict(3, worst <= 1e-4, format!("max relative difference {worst:.3e}"), t0);
}

#[test]
fn criterion_04_real_eigenvalue_count() {
    let t0 = Instant::now();
    let spec = EnsembleSpec::interpolating(1.0, 2, 100_000, 104);
    let out = run_mc(&spec, None, &[GridKind::RealAxis { half_width: 1e-9 }], &opts()).unwrap();
    let mean = out.grids[0].total() as f64 / out.grids[0].n_matrices as f64;
    let q = QuadSpec::default();
    let integral = 2.0 * try_integrate_semi_infinite(|x| ginoe_real_density(2, x, &q), 0.0, 1.0, &q).unwrap();
    verdict(
        4,
        (mean - SQRT_2).abs() <= 0.02 && (integral - SQRT_2).abs() <= 1e-6,
        format!("mean count {mean:.5}, integral {integral:.12}"),
        t0,
    );
}

#[test]
fn criterion_05_weak_nonreality_convergence() {
    let t0 = Instant::now();
    let delta = 1.0;
    let model = DensityModel::WeakNonReality {
        delta,
        form: WeakForm::Closed,
    };
    let mut l1 = Vec::new();
    for (n, samples) in [(64usize, 5_000u64), (128, 6_000), (256, 8_000)] {
        let tau = 1.0 - delta * delta / n as f64;
        let spec = EnsembleSpec::interpolating(tau, n, samples, 105 + n as u64);
        let grid = GridKind::Strip {
            x0: 0.0,
            half_width: 0.5,
            scaled_x: true,
            y: Axis::new(-2.0, 2.0, 80).unwrap(),
        };
        let out = run_mc(&spec, None, &[grid], &opts()).unwrap();
        l1.push(l1_distance(&out.grids[0], &model, &QuadSpec::default()).unwrap());
    }
    let decreasing = l1.windows(2).all(|w| w[1] < w[0]);
    verdict(
        5,
        decreasing && l1[2] <= 0.05,
        format!("L1 at N=64,128,256: {:.4}, {:.4}, {:.4}", l1[0], l1[1], l1[2]),
        t0,
    );
}

#[test]
fn criterion_06_dual_form_identity() {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for delta in [0.25, 1.0, 4.0] {
        for xt in [0.0, 0.5] {
            let p = WeakNonRealityParams::new(delta, xt).unwrap();
            for k in 0..=120 {
                let y = -3.0 + 0.05 * k as f64;
                let a = weak_nonreality_density(p, y, WeakForm::Integral).unwrap();
                let b = weak_nonreality_density(p, y, WeakForm::Closed).unwrap();
                worst = worst.max((a - b).abs());
            }
        }
    }
    verdict(6, worst <= 1e-10, format!("max |integral - closed| = {worst:.3e}"), t0);
}

#[test]
fn criterion_07_eigenvector_law() {
    let t0 = Instant::now();
    let spec = EnsembleSpec::interpolating(0.5, 64, 5_000, 107);
    let grid = GridKind::DiscOverlap {
        center: c(0.3, 0.3),
        radius: 0.1,
        u: Axis::new(0.0, 15.0, 30).unwrap(),
    };
    let out = run_mc(&spec, None, &[grid], &opts()).unwrap();
    let r = compare_density(
        &out.grids[0],
        &DensityModel::LimitingEigvec { tau: 0.5 },
        &QuadSpec::default(),
        &Thresholds::default(),
    )
    .unwrap();
    verdict(
        7,
        r.chi2_per_dof <= 1.5,
        format!(
            "chi2/dof={:.3} max|z|={:.2} mass ratio={:.4} eigenvalues={}",
            r.chi2_per_dof,
            r.max_abs_z,
            r.total_mass_ratio,
            out.grids[0].total()
        ),
        t0,
    );
}

#[test]
fn criterion_08_two_path_equality() {
    let t0 = Instant::now();
    let mut rng = matrix_rng(108, 0, 0);
    let gauss = |rng: &mut _| {
        let (a, b) = normal_pair(rng);
        c(a, b) * std::f64::consts::FRAC_1_SQRT_2
    };
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let n = 2 + k % 7;
        let r: Vec<Complex64> = (0..n).map(|_| gauss(&mut rng)).collect();
        let mut l: Vec<Complex64> = (0..n).map(|_| gauss(&mut rng)).collect();
        let s = cdot(&l, &r);
        l.iter_mut().for_each(|x| *x /= s.conj());
        let a = gauss(&mut rng) * 2.0;
        let z = gauss(&mut rng) * 1.5;
        let v = UnitVector::new(haar_vector(&mut rng, n)).unwrap();
        let d = Deformation::rank_one(a, r.clone(), l.clone()).unwrap();
        let p1 = jpd_additive(&d, n, z, &v).unwrap();
        let p2 = rank_one_jpd(a, &r, &l, n, z, &v).unwrap();
        worst = worst.max((p1 - p2).abs() / p1.abs().max(p2.abs()).max(f64::MIN_POSITIVE));
    }
    verdict(8, worst <= 1e-10, format!("max relative difference {worst:.3e} over 1000 instances"), t0);
}

#[test]
fn criterion_09_rank_one_normal_mc() {
    let t0 = Instant::now();
    let a = c(8f64.sqrt() * 0.5, 0.0);
    let spec = EnsembleSpec::deformed(Deformation::rank_one_normal(a, 8), 20_000, 109);
    let out = run_mc(&spec, None, &[ginue_grid()], &opts()).unwrap();
    let r = compare_density(
        &out.grids[0],
        &DensityModel::RankOneNormal { a, n: 8 },
        &QuadSpec::default(),
        &Thresholds::default(),
    )
    .unwrap();
    verdict(
        9,
        r.verdict.passed(),
        format!("chi2/dof={:.3} max|z|={:.2} bins={}", r.chi2_per_dof, r.max_abs_z, r.n_effective_bins),
        t0,
    );
}

#[test]
fn criterion_10_outlier() {
    let t0 = Instant::now();
    let n = 100usize;
    let alpha = c(1.5, 0.0);
    let samples = 2_000u64;
    let sn = (n as f64).sqrt();
    let spec = EnsembleSpec::deformed(Deformation::rank_one_normal(alpha * sn, n), samples, 110);
    let mut e1 = vec![c(0.0, 0.0); n];
    e1[0] = c(1.0, 0.0);
    let per = map_matrices(&spec, Some(&e1), true, &opts(), |_, recs| {
        let outside = recs.iter().filter(|r| r.z.norm() / sn > 1.1).count();
        let top = recs
            .iter()
            .max_by(|a, b| a.z.norm().total_cmp(&b.z.norm()))
            .expect("eigenvalues");
        (outside, top.z / sn, top.q.expect("probe overlap"))
    })
    .unwrap();
    let done: Vec<_> = per.into_iter().flatten().collect();
    let m = done.len() as f64;
    let exactly_one = done.iter().filter(|d| d.0 == 1).count() as f64 / m;
    let mean_w: Complex64 = done.iter().map(|d| d.1).sum::<Complex64>() / m;
    let var = done.iter().map(|d| (sn * (d.1 - mean_w)).norm_sqr()).sum::<f64>() / (m - 1.0);
    let mean_q = done.iter().map(|d| d.2).sum::<f64>() / m;
    let sigma = outlier_sigma(alpha).unwrap();
    let q_star = overlap_typical(alpha).unwrap();
    let ok_frac = exactly_one >= 0.99;
    let ok_mean = (mean_w - alpha).norm() <= 3.0 * sigma / (n as f64 * m).sqrt();
    let ok_var = (var / sigma - 1.0).abs() <= 0.2;
    let ok_q = (mean_q - q_star).abs() <= 0.03;
    verdict(
        10,
        ok_frac && ok_mean && ok_var && ok_q,
        format!(
            "exactly-one fraction {exactly_one:.4} [{}]; |mean w - alpha| {:.2e} (bound {:.2e}) [{}]; \
             var {var:.3} vs sigma {sigma:.3} [{}]; mean q {mean_q:.4} vs {q_star:.4} [{}]",
            ok_frac,
            (mean_w - alpha).norm(),
            3.0 * sigma / (n as f64 * m).sqrt(),
            ok_mean,
            ok_var,
            ok_q
        ),
        t0,
    );
}

#[test]
fn criterion_11_hikami_pnini_n2() {
    let t0 = Instant::now();
    let eigs = [c(0.6, 0.2), c(-0.5, -0.4)];
    let d = Deformation::NormalDiag { eigs: eigs.to_vec() };
    let points = [c(0.1, 0.3), c(0.9, -0.2), c(-0.7, 0.5), c(0.3, -1.1), c(-1.2, -0.6)];
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (k, &z) in points.iter().enumerate() {
        let hp = hikami_pnini_density(&eigs, 2, z, 1e-3, Stencil::Richardson, &QuadSpec::default()).unwrap();
        let mut rng = matrix_rng(111, k as u64, 0);
        let m = 10_000_000;
        let mut s = 0.0;
        for _ in 0..m {
            let v = UnitVector::new(haar_vector(&mut rng, 2)).unwrap();
            s += jpd_additive(&d, 2, z, &v).unwrap();
        }
        let mc = s / m as f64;
        let rel = (hp - mc).abs() / mc;
        worst = worst.max(rel);
        detail.push(format!("{rel:.1e}"));
    }
    verdict(
        11,
        worst <= 0.02,
        format!("relative errors [{}], max {worst:.2e}", detail.join(", ")),
        t0,
    );
}

#[test]
fn criterion_12_identity_suite() {
    let t0 = Instant::now();
    let mut fails = Vec::new();
    let mut notes = Vec::new();
    let sphere: [(&str, u32, fn(f64) -> f64); 3] =
        [("1", 5, |_| 1.0), ("u", 5, |u| u), ("exp(-3u)", 8, |u| (-3.0 * u).exp())];
    for (label, n, f) in sphere {
        let r = check_sphere_lemma(label, f, n, 1_000_000, 112).unwrap();
        notes.push(format!("sphere {label} z={:.2}", r.z_score));
        if r.z_score.abs() > 4.0 {
            fails.push(format!("sphere lemma {label}"));
        }
    }
    for n in [2, 6] {
        let r = check_q_law(n, 1_000_000, 113, 100).unwrap();
        notes.push(format!("q-law N={n} chi2/dof={:.3}", r.comparison.chi2_per_dof));
        if !r.verdict().passed() {
            fails.push(format!("q law N={n}"));
        }
    }
    let iz = check_izhc_n2(0.5, 2.0, 0.05, 10_000_000, 114).unwrap();
    notes.push(format!("izhc z={:.2}", iz.z_score));
    if iz.z_score.abs() > 4.0 {
        fails.push("izhc".into());
    }
    let sd = check_squared_delta(
        &Polynomial::parse("z").unwrap(),
        |z| (-z.norm_sqr()).exp(),
        &[1e-2, 1e-3, 1e-4],
        &QuadSpec::default(),
    )
    .unwrap();
    let c_hat = sd.rows.last().unwrap().c_hat;
    notes.push(format!("C(1e-4)={c_hat:.6}"));
    if (c_hat / (4.0 * PI) - 1.0).abs() > 0.02 {
        fails.push("squared delta".into());
    }
    let asy = check_asymptotics(&[25, 100, 400, 1600]).unwrap();
    if !asy.all_decreasing() {
        fails.push("asymptotics".into());
    }
    verdict(
        12,
        fails.is_empty(),
        format!("{}; failing: [{}]", notes.join(", "), fails.join(", ")),
        t0,
    );
}

#[test]
fn criterion_13_determinism() {
    let t0 = Instant::now();
    let spec = EnsembleSpec::interpolating(0.0, 8, 20_000, 101);
    let grids = [ginue_grid()];
    let one = run_mc(&spec, None, &grids, &McOptions { workers: 1, ..McOptions::default() }).unwrap();
    let eight = run_mc(&spec, None, &grids, &McOptions { workers: 8, ..McOptions::default() }).unwrap();
    let same = csv(&one.grids[0]) == csv(&eight.grids[0]);
    verdict(13, same, "criterion 1 histogram CSV with 1 vs 8 workers".into(), t0);
}

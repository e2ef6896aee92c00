//! End-to-end acceptance checks. Each test prints one `A<n> PASS|FAIL` line to
//! stderr with the measured quantities, then asserts the verdict.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use ocs_core::constructions::bsv::sphere_point;
use ocs_core::constructions::{
    bsv, conformal_kahler, conformal_metric, constant_kahler, random_orthogonal, s6_round, scaled_product_pair,
    sphere_map_degree, BSVSpec, EllipticCurveSpec, FubiniStudyProduct, MapKind, TrigPoly, Weierstrass,
};
use ocs_core::gauduchon::{
    conformal_gauduchon_factor, eq1_residual, gaud_vs_g, gauduchon_curvature, k_defect, kg_identity_residual,
    torsion_bound_report, FactorConfig,
};
use ocs_core::gridcalc::{differentiate, FlatChart, TensorField};
use ocs_core::hermitian::{chern_from_metric, identity_audits, nijenhuis, OrthogonalACS};
use ocs_core::moduli::{degree_sweep, minimize, retract, PerturbationBasis, SearchConfig};
use ocs_core::riemann::curvature_scalars;
use ocs_core::riemann::kernels::weyl_pairing_at;
use ocs_core::constants::scalar_coeff;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

/// Heavy grids run one at a time.
static HEAVY: Mutex<()> = Mutex::new(());

fn heavy() -> MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(id: &str, pass: bool, detail: String) {
    let word = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "{id} {word}: {detail}");
    assert!(pass, "{id} failed: {detail}");
}

fn skew_basis(seed: u64) -> DMatrix<f64> {
    DMatrix::<f64>::identity(6, 6) + random_orthogonal(6, seed) * 0.25
}

fn flat_kahler(res: usize) -> OrthogonalACS {
    let chart = Arc::new(FlatChart::new(skew_basis(1), vec![0, 1], res).unwrap());
    constant_kahler(&chart, &random_orthogonal(6, 3)).unwrap()
}

fn conformal(res: usize, u_seed: u64, q_seed: u64) -> OrthogonalACS {
    let chart = Arc::new(FlatChart::unit(6, vec![0, 1], res).unwrap());
    conformal_kahler(&chart, &TrigPoly::random(2, 2, 0.15, u_seed), &random_orthogonal(6, q_seed)).unwrap()
}

fn bsv_acs(kind: MapKind, res: usize) -> OrthogonalACS {
    bsv(&BSVSpec::new(kind, res)).unwrap().acs
}

#[test]
fn a01_flat_kahler_chain() {
    let _g = heavy();
    let t0 = Instant::now();
    let acs = flat_kahler(32);
    let h = chern_from_metric(&acs).unwrap();
    let cs = curvature_scalars(&h.g, &h.omega).unwrap();
    let gaud = gauduchon_curvature(&cs);
    let mut parts = vec![
        ("N".to_string(), nijenhuis(&acs).unwrap().max_abs()),
        ("T".into(), h.torsion.max_abs()),
        ("dω".into(), h.d_omega.max_abs()),
        ("η".into(), h.eta_max()),
        ("θ".into(), h.theta.max_abs()),
        ("eq1".into(), eq1_residual(&h, &cs).unwrap().max_abs()),
    ];
    for k in 1..=2 {
        parts.push((format!("defect{k}"), k_defect(&acs, k).unwrap().max_abs()));
        parts.push((format!("kg{k}"), kg_identity_residual(&h, &gaud, k).unwrap().residual.max_abs()));
    }
    let elapsed = t0.elapsed();
    let worst = parts.iter().map(|p| p.1).fold(0.0, f64::max);
    let pass = worst <= 1e-9 && elapsed < Duration::from_secs(10);
    verdict("A1", pass, format!("max residual {worst:.2e} over {parts:?}, {:.2} s", elapsed.as_secs_f64()));
}

#[test]
fn a02_bsv_total_torsion() {
    let _g = heavy();
    let t0 = Instant::now();
    let h = chern_from_metric(&bsv_acs(MapKind::P, 256)).unwrap();
    let l2 = h.torsion_l2().unwrap();
    let target = 64.0 * PI;
    let rel = (l2 - target).abs() / target;
    let elapsed = t0.elapsed();
    let pass = rel <= 0.01 && elapsed < Duration::from_secs(300);
    verdict("A2", pass, format!("∫|T|² = {l2:.10} vs 64π = {target:.10}, rel {rel:.2e}, {:.1} s", elapsed.as_secs_f64()));
}

#[test]
fn a03_degree_linearity() {
    let _g = heavy();
    let t = degree_sweep(&[2, 3, 4], &[64], &EllipticCurveSpec::default(), &DMatrix::identity(4, 4)).unwrap();
    let pass = t.slope_relative_error <= 0.02 && t.is_monotone();
    let vals: Vec<String> = t.rows.iter().map(|r| format!("d{}={:.6}", r.degree, r.torsion_l2)).collect();
    verdict(
        "A3",
        pass,
        format!("slope {:.6} vs 32π = {:.6}, rel {:.2e}, monotone {}, {}", t.slope, 32.0 * PI, t.slope_relative_error, t.is_monotone(), vals.join(" ")),
    );
}

#[test]
fn a04_bsv_balanced() {
    let _g = heavy();
    let mut worst = 0.0_f64;
    let mut detail = Vec::new();
    for kind in MapKind::all() {
        let h = chern_from_metric(&bsv_acs(kind, 256)).unwrap();
        let r = h.eta_max() / h.tau.max_abs();
        worst = worst.max(r);
        detail.push(format!("{kind:?} {r:.2e}"));
    }
    verdict("A4", worst <= 1e-6, format!("max|η|/max|τ| at 256²: {}", detail.join(", ")));
}

#[test]
fn a05_curvature_torsion_identity() {
    let fs = FubiniStudyProduct::default();
    let c = scalar_coeff(3);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut fs_worst = 0.0_f64;
    for _ in 0..200 {
        let mut x = [0.0; 6];
        for v in x.iter_mut() {
            *v = rng.random_range(-2.0..2.0);
        }
        let pc = fs.curvature(&x).unwrap();
        let w = weyl_pairing_at(6, &pc.ginv, &pc.weyl, &fs.omega(&x));
        fs_worst = fs_worst.max((c * pc.scalar - 2.0 * w).abs());
    }
    let _g = heavy();
    let l2 = |res| {
        let acs = conformal(res, 9, 4);
        let h = chern_from_metric(&acs).unwrap();
        let cs = curvature_scalars(&h.g, &h.omega).unwrap();
        eq1_residual(&h, &cs).unwrap()
    };
    let (coarse, fine) = (l2(32), l2(64));
    let ratio = coarse.l2 / fine.l2;
    let pass = fs_worst <= 1e-6 && ratio >= 4.0;
    verdict(
        "A5",
        pass,
        format!(
            "Fubini–Study max residual {fs_worst:.2e}; conformal L² residual {:.2e} -> {:.2e} (×{ratio:.2e}), signed ∫ {:.2e} -> {:.2e}",
            coarse.l2, fine.l2, coarse.integrated, fine.integrated
        ),
    );
}

#[test]
fn a06_c1_bound() {
    let _g = heavy();
    let mut examples: Vec<(String, OrthogonalACS)> = vec![
        ("kahler".into(), flat_kahler(16)),
        ("conformal".into(), conformal(64, 9, 4)),
    ];
    for kind in MapKind::all() {
        examples.push((format!("bsv {kind:?}"), bsv_acs(kind, 128)));
    }
    let j0 = constant_kahler(&Arc::new(FlatChart::unit(6, vec![0, 1], 16).unwrap()), &DMatrix::identity(6, 6)).unwrap();
    let basis = PerturbationBasis::new(&j0, Some(2)).unwrap();
    for (norm, seed) in [(0.1, 1), (0.5, 2)] {
        let c = basis.random_coeffs(j0.metric(), norm, 2, seed).unwrap();
        examples.push((format!("perturbed {norm}"), retract(&j0, &basis.field(&c).unwrap()).unwrap()));
    }
    let mut worst = f64::INFINITY;
    let mut detail = Vec::new();
    for (name, acs) in &examples {
        let s = identity_audits(&chern_from_metric(acs).unwrap()).unwrap().c1_slack.min;
        worst = worst.min(s);
        detail.push(format!("{name} {s:.2e}"));
    }
    verdict("A6", worst >= -1e-8, format!("min(3|T| − |∇J|): {}", detail.join(", ")));
}

#[test]
fn a07_torsion_bound() {
    let _g = heavy();
    let mut cases: Vec<(String, OrthogonalACS, Vec<usize>)> = vec![("kahler".into(), flat_kahler(16), vec![1, 2])];
    for kind in MapKind::all() {
        cases.push((format!("bsv {kind:?}"), bsv_acs(kind, 256), vec![2]));
    }
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, acs, ks) in &cases {
        let h = chern_from_metric(acs).unwrap();
        let cs = curvature_scalars(&h.g, &h.omega).unwrap();
        let gg = gaud_vs_g(&cs).unwrap().min;
        pass &= gg >= -1e-8;
        for &k in ks {
            let defect = k_defect(acs, k).unwrap().max_abs();
            let slack = torsion_bound_report(&h, &cs, k).unwrap().min;
            // Only weakly k-Gauduchon examples are in scope.
            pass &= defect <= 1e-6 && slack >= -1e-8;
            detail.push(format!("{name} k={k}: defect {defect:.1e} slack {slack:.2e} G−Gaud {gg:.2e}"));
        }
    }
    verdict("A7", pass, detail.join("; "));
}

#[test]
fn a08_six_sphere() {
    let s6 = s6_round();
    let (mut compat, mut square, mut nmin) = (0.0_f64, 0.0_f64, f64::INFINITY);
    for p in s6.sample_points(100, 7) {
        let q = s6.at(&p);
        compat = compat.max(q.compat_residual);
        square = square.max(q.square_residual);
        nmin = nmin.min(q.nijenhuis_norm());
    }
    let pass = compat <= 1e-10 && square <= 1e-10 && nmin > 0.1;
    verdict("A8", pass, format!("compat {compat:.1e}, J² {square:.1e}, min |N| {nmin:.4} over 100 points"));
}

#[test]
fn a09_nijenhuis_descent() {
    let _g = heavy();
    let j0 = constant_kahler(&Arc::new(FlatChart::unit(6, vec![0, 1], 8).unwrap()), &DMatrix::identity(6, 6)).unwrap();
    let basis = PerturbationBasis::new(&j0, None).unwrap();
    let c0 = basis.random_coeffs(j0.metric(), 0.1, 1, 5).unwrap();
    let config = SearchConfig { max_iters: 200, seed: 5, ..Default::default() };
    let t = minimize(&j0, &basis, &c0, &config).unwrap();
    let ratio = t.initial_energy() / t.final_energy().max(f64::MIN_POSITIVE);
    let iters = t.steps.len().saturating_sub(1);
    let pass = ratio >= 1e3 && t.is_monotone() && iters <= 200;
    verdict(
        "A9",
        pass,
        format!("energy {:.3e} -> {:.3e} (×{ratio:.2e}) in {iters} iterations, monotone {}", t.initial_energy(), t.final_energy(), t.is_monotone()),
    );
}

#[test]
fn a10_scaled_pair() {
    let pair = scaled_product_pair(2.0, &DMatrix::identity(2, 2), &DMatrix::identity(4, 4)).unwrap();
    let same_j = pair.scaled.j().values() == pair.unscaled.j().values();
    let res = [
        pair.scaled.compat_residual(),
        pair.unscaled.compat_residual(),
        pair.scaled.square_residual(),
        pair.unscaled.square_residual(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let gap = pair.metric_gap();
    let pass = same_j && res <= 1e-12 && gap > 0.5;
    verdict("A10", pass, format!("shared J {same_j}, max residual {res:.1e}, metric gap {gap:.3}"));
}

#[test]
fn a11_oracles() {
    let spec = EllipticCurveSpec::default();
    let w = Weierstrass::new(&spec).unwrap();
    let (w1, w2) = (spec.omega1(), spec.omega2());
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mut period, mut ode) = (0.0_f64, 0.0_f64);
    let mut n = 0;
    while n < 100 {
        let z = w1 * rng.random_range(-0.5..0.5) + w2 * rng.random_range(-0.5..0.5);
        if z.norm() < 0.2 {
            continue;
        }
        n += 1;
        let (p, dp) = w.eval(z).unwrap();
        for s in [w1, w2, w1 + w2, w1 * 3.0 - w2] {
            period = period.max((w.p(z + s).unwrap() - p).norm() / p.norm().max(1.0));
        }
        let lhs = dp * dp;
        ode = ode.max((lhs - (p * p * p * 4.0 - w.g2() * p - w.g3())).norm() / lhs.norm().max(1.0));
    }
    let target = Complex64::new(0.31, 0.52);
    let counted: Vec<usize> = MapKind::all().into_iter().map(|k| common::count_preimages(k, target)).collect();
    let signed: Vec<i64> =
        MapKind::all().into_iter().map(|k| sphere_map_degree(&spec, k, 128, sphere_point(target, Complex64::new(1.0, 0.0))).unwrap()).collect();

    let chart = Arc::new(FlatChart::unit(6, vec![0, 1], 16).unwrap());
    let f = |x: &[f64]| (2.0 * PI * (3.0 * x[0] - 2.0 * x[1])).sin() + 0.5 * (2.0 * PI * 7.0 * x[1]).cos();
    let df0 = |x: &[f64]| 6.0 * PI * (2.0 * PI * (3.0 * x[0] - 2.0 * x[1])).cos();
    let field = TensorField::sample(chart.clone(), vec![], move |x| vec![f(x)]).unwrap();
    let d = differentiate(&field, 0).unwrap();
    let spectral = (0..chart.num_points()).map(|p| (d.at(p)[0] - df0(&chart.point(p))).abs()).fold(0.0, f64::max);

    let pass = period <= 1e-8 && ode <= 1e-6 && counted == [2, 3, 4] && signed == [2, 3, 4] && spectral <= 1e-10;
    verdict(
        "A11",
        pass,
        format!("periodicity {period:.1e}, ODE {ode:.1e}, preimages {counted:?}, grid degrees {signed:?}, spectral {spectral:.1e}"),
    );
}

#[test]
fn a12_gauduchon_factor() {
    let _g = heavy();
    let acs = conformal(16, 11, 2);
    let sol = conformal_gauduchon_factor(&acs, &FactorConfig { target_ratio: 1e-14, ..Default::default() }).unwrap();
    let reduction = (sol.f0 / sol.f_final.max(f64::MIN_POSITIVE)).sqrt();
    let solved = acs.with_metric(conformal_metric(acs.metric(), &sol.u).unwrap()).unwrap();
    let h = chern_from_metric(&solved).unwrap();
    let cs = curvature_scalars(&h.g, &h.omega).unwrap();
    let kg = kg_identity_residual(&h, &gauduchon_curvature(&cs), 2).unwrap();
    let pass = reduction >= 1e6 && kg.residual.integrated.abs() <= 1e-5;
    verdict(
        "A12",
        pass,
        format!(
            "defect L² reduced ×{reduction:.2e} in {} iterations; ∫ kg residual {:.2e} (pointwise max {:.2e})",
            sol.history.len() - 1,
            kg.residual.integrated,
            kg.residual.max_abs()
        ),
    );
}

use std::sync::Arc;

use nalgebra::DMatrix;
use ocs_core::constructions::bsv::{bsv, BSVSpec, MapKind};
use ocs_core::constructions::{conformal_kahler, constant_kahler, random_orthogonal, TrigPoly};
use ocs_core::gridcalc::FlatChart;
use ocs_core::hermitian::{chern_from_metric, identity_audits, nijenhuis, nijenhuis_energy_of, HermitianPack, OrthogonalACS};
use ocs_core::riemann::christoffel;
use proptest::prelude::*;

fn skew_chart(res: usize, seed: u64) -> Arc<FlatChart> {
    let b = DMatrix::<f64>::identity(6, 6) + random_orthogonal(6, seed) * 0.3;
    Arc::new(FlatChart::new(b, vec![0, 1], res).unwrap())
}

fn conformal(res: usize) -> (OrthogonalACS, TrigPoly) {
    let u = TrigPoly::random(2, 2, 0.15, 21);
    let acs = conformal_kahler(&skew_chart(res, 1), &u, &random_orthogonal(6, 8)).unwrap();
    (acs, u)
}

fn bsv_acs(kind: MapKind, res: usize) -> OrthogonalACS {
    bsv(&BSVSpec::new(kind, res)).unwrap().acs
}

fn torsion_antisymmetry(h: &HermitianPack) -> f64 {
    let n = h.dim();
    let mut r = 0.0_f64;
    for p in 0..h.torsion.num_points() {
        let t = h.torsion.at(p);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    r = r.max((t[(k * n + i) * n + j] + t[(k * n + j) * n + i]).abs());
                }
            }
        }
    }
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn constant_structures_are_kahler(q_seed in 0u64..10_000, b_seed in 0u64..10_000) {
        let acs = constant_kahler(&skew_chart(8, b_seed), &random_orthogonal(6, q_seed)).unwrap();
        prop_assert!(acs.compat_residual() <= 1e-12 && acs.square_residual() <= 1e-12);
        prop_assert!(nijenhuis(&acs).unwrap().max_abs() <= 1e-12);
        let h = chern_from_metric(&acs).unwrap();
        prop_assert!(h.torsion.max_abs() <= 1e-12);
        prop_assert!(h.d_omega.max_abs() <= 1e-12);
        prop_assert!(h.theta.max_abs() <= 1e-12);
        prop_assert!(h.chern_gamma.max_abs() <= 1e-12);
    }
}

#[test]
fn chern_connection_preserves_metric_and_structure() {
    for acs in [conformal(64).0, bsv_acs(MapKind::P, 64), bsv_acs(MapKind::PSquared, 128)] {
        let h = chern_from_metric(&acs).unwrap();
        assert!(h.chern_g_residual <= 1e-8, "∇g = {}", h.chern_g_residual);
        assert!(h.chern_j_residual <= 1e-8, "∇J = {}", h.chern_j_residual);
        assert!(torsion_antisymmetry(&h) <= 1e-12);
    }
}

#[test]
fn chern_agrees_with_levi_civita_on_kahler() {
    let acs = constant_kahler(&skew_chart(16, 4), &random_orthogonal(6, 5)).unwrap();
    let h = chern_from_metric(&acs).unwrap();
    let lc = christoffel(acs.metric()).unwrap();
    assert!(h.chern_gamma.sub(&lc).unwrap().max_abs() <= 1e-8);
}

#[test]
fn conformal_structures_are_integrable_with_lee_form_of_the_factor() {
    let (acs, u) = conformal(64);
    assert!(nijenhuis(&acs).unwrap().max_abs() <= 1e-12);
    let h = chern_from_metric(&acs).unwrap();
    let chart = acs.j().chart().clone();
    let mut worst = 0.0_f64;
    for p in 0..chart.num_points() {
        let x = chart.point(p);
        let xa = [x[0], x[1]];
        let th = h.theta.at(p);
        for (s, axis) in [0usize, 1].into_iter().enumerate() {
            worst = worst.max((th[axis] - 4.0 * u.deriv(&xa, s)).abs());
        }
        for axis in 2..6 {
            worst = worst.max(th[axis].abs());
        }
    }
    assert!(worst <= 1e-9, "θ − 4du = {worst}");
}

#[test]
fn bsv_nijenhuis_energy_converges_under_refinement() {
    let e32 = {
        let a = bsv_acs(MapKind::P, 32);
        nijenhuis_energy_of(a.j(), a.metric()).unwrap()
    };
    let e64 = {
        let a = bsv_acs(MapKind::P, 64);
        nijenhuis_energy_of(a.j(), a.metric()).unwrap()
    };
    assert!(e64 * 4.0 <= e32, "energies {e32} -> {e64}");
}

#[test]
fn eta_is_frame_independent_and_negligible_on_bsv() {
    let h = chern_from_metric(&bsv_acs(MapKind::P, 64)).unwrap();
    assert!(h.eta_frame_gap <= 1e-10, "gap {}", h.eta_frame_gap);
    let tau = h.tau.max_abs();
    assert!(tau > 1.0);
    assert!(h.eta_max() <= 1e-6 * tau);
    // The triple pole of ℘′ needs finer grids; η still shrinks fast under refinement.
    let ratio = |res| {
        let h = chern_from_metric(&bsv_acs(MapKind::PPrime, res)).unwrap();
        assert!(h.eta_frame_gap <= 1e-10);
        h.eta_max() / h.tau.max_abs()
    };
    let (r32, r64) = (ratio(32), ratio(64));
    assert!(r64 * 10.0 <= r32, "η/τ {r32} -> {r64}");
}

#[test]
fn torsion_dominates_nabla_j() {
    let examples = [
        constant_kahler(&skew_chart(16, 3), &random_orthogonal(6, 3)).unwrap(),
        conformal(32).0,
        bsv_acs(MapKind::P, 32),
        bsv_acs(MapKind::PPrime, 32),
    ];
    for acs in examples {
        let audit = identity_audits(&chern_from_metric(&acs).unwrap()).unwrap();
        assert!(audit.c1_slack.min >= -1e-8, "slack {}", audit.c1_slack.min);
        assert!(audit.dw_tau_residual <= 1e-8, "dω/τ {}", audit.dw_tau_residual);
    }
}

#[test]
fn lee_form_is_twice_real_eta() {
    let (acs, _) = conformal(32);
    let audit = identity_audits(&chern_from_metric(&acs).unwrap()).unwrap();
    let c = audit.theta_eta_calibrated.unwrap();
    assert!((c - 1.0).abs() <= 1e-8, "c = {c}");
    assert!(audit.theta_eta_calibrated_residual <= 1e-8);
}

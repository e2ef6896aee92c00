use std::f64::consts::PI;
use std::sync::Arc;

use ocs_core::constructions::bsv::{bsv, BSVSpec, MapKind};
use ocs_core::constructions::{conformal_kahler, conformal_metric, constant_kahler, flat_torus, random_orthogonal, TrigPoly};
use ocs_core::gauduchon::forms::{bidegree_project, Coframes, FormField};
use ocs_core::gauduchon::{
    conformal_gauduchon_factor, eq1_residual, gauduchon_curvature, gaud_vs_g, k_defect, kg_identity_residual,
    reassembly_residual, FactorConfig,
};
use ocs_core::gridcalc::{FlatChart, Slot, TensorField};
use ocs_core::hermitian::{chern_from_metric, kahler_form, OrthogonalACS};
use ocs_core::riemann::curvature_scalars;
use ocs_core::Error;

fn unit_chart(res: usize) -> Arc<FlatChart> {
    flat_torus(nalgebra::DMatrix::identity(6, 6), vec![0, 1], res).unwrap().0
}

fn conformal(res: usize, seed: u64) -> OrthogonalACS {
    let u = TrigPoly::random(2, 2, 0.15, seed);
    conformal_kahler(&unit_chart(res), &u, &random_orthogonal(6, 2)).unwrap()
}

fn kahler(res: usize) -> OrthogonalACS {
    constant_kahler(&unit_chart(res), &random_orthogonal(6, 6)).unwrap()
}

#[test]
fn gauduchon_curvature_is_dominated_by_g() {
    for acs in [kahler(16), conformal(32, 1), conformal(32, 2), bsv(&BSVSpec::new(MapKind::P, 32)).unwrap().acs] {
        let h = chern_from_metric(&acs).unwrap();
        let cs = curvature_scalars(&h.g, &h.omega).unwrap();
        let slack = gaud_vs_g(&cs).unwrap();
        assert!(slack.min >= -1e-8, "G − Gaud min {}", slack.min);
    }
    let acs = kahler(16);
    let h = chern_from_metric(&acs).unwrap();
    let cs = curvature_scalars(&h.g, &h.omega).unwrap();
    assert!(gauduchon_curvature(&cs).max_abs() <= 1e-12);
    assert!(cs.g_curvature().max_abs() <= 1e-12);
}

#[test]
fn defects_vanish_on_kahler_and_scale_under_homothety() {
    let flat = kahler(16);
    for k in 1..=2 {
        assert!(k_defect(&flat, k).unwrap().max_abs() <= 1e-10);
    }
    let acs = conformal(32, 4);
    for k in 1..=2 {
        let d = k_defect(&acs, k).unwrap();
        assert!(d.max_abs() > 1e-3);
        let scaled = acs.with_metric(acs.metric().scale(4.0)).unwrap();
        let ds = k_defect(&scaled, k).unwrap();
        assert!(ds.sub(&d.scale(0.25)).unwrap().max_abs() <= 1e-9 * d.max_abs(), "k = {k}");
    }
    assert!(matches!(k_defect(&acs, 0), Err(Error::KOutOfRange { .. })));
    assert!(matches!(k_defect(&acs, 3), Err(Error::KOutOfRange { .. })));
}

#[test]
fn curvature_torsion_identity_converges() {
    let l2 = |res| {
        let acs = conformal(res, 9);
        let h = chern_from_metric(&acs).unwrap();
        let cs = curvature_scalars(&h.g, &h.omega).unwrap();
        eq1_residual(&h, &cs).unwrap()
    };
    let (coarse, fine) = (l2(32), l2(64));
    assert!(coarse.l2 >= 4.0 * fine.l2, "{} -> {}", coarse.l2, fine.l2);
    assert!(fine.max_abs() <= 1e-6 * fine.scale);
}

#[test]
fn torsion_identity_is_trivial_on_kahler() {
    let h = chern_from_metric(&kahler(16)).unwrap();
    let cs = curvature_scalars(&h.g, &h.omega).unwrap();
    let gaud = gauduchon_curvature(&cs);
    for k in 1..=2 {
        let r = kg_identity_residual(&h, &gaud, k).unwrap();
        assert!(r.lhs_max <= 1e-9 && r.rhs_max <= 1e-9);
        assert!(r.residual.max_abs() <= 1e-9);
    }
    assert!(eq1_residual(&h, &cs).unwrap().max_abs() <= 1e-9);
}

fn generic_two_form(chart: &Arc<FlatChart>) -> TensorField {
    TensorField::sample(chart.clone(), vec![Slot::Lower, Slot::Lower], |x| {
        let mut v = vec![0.0; 36];
        for i in 0..6 {
            for j in (i + 1)..6 {
                let a = ((i * 6 + j) as f64 * 0.7 + 2.0 * PI * (x[0] + 2.0 * x[1])).sin();
                v[i * 6 + j] = a;
                v[j * 6 + i] = -a;
            }
        }
        v
    })
    .unwrap()
}

#[test]
fn bidegree_decomposition() {
    let acs = bsv(&BSVSpec::new(MapKind::PSquared, 16)).unwrap().acs;
    let frames = Coframes::new(&acs).unwrap();
    let omega = FormField::from_two_form(&kahler_form(&acs)).unwrap();
    assert!(bidegree_project(&omega, 2, 0, &frames).unwrap().form.max_abs() <= 1e-12);
    assert!(bidegree_project(&omega, 0, 2, &frames).unwrap().form.max_abs() <= 1e-12);
    let back = bidegree_project(&omega, 1, 1, &frames).unwrap().form;
    assert!(back.add(&omega.scale((-1.0).into())).unwrap().max_abs() <= 1e-12);

    let alpha = FormField::from_two_form(&generic_two_form(acs.j().chart())).unwrap();
    assert!(reassembly_residual(&alpha, &frames).unwrap() <= 1e-12);
    assert!(reassembly_residual(&alpha.wedge(&omega).unwrap(), &frames).unwrap() <= 1e-11);
    // A real form has conjugate (2,0) and (0,2) parts.
    let a20 = bidegree_project(&alpha, 2, 0, &frames).unwrap().form;
    let a02 = bidegree_project(&alpha, 0, 2, &frames).unwrap().form;
    assert!(a20.max_abs() > 1e-3);
    for p in 0..acs.j().num_points() {
        for m in a20.masks() {
            assert!((a20.get(p, m) - a02.get(p, m).conj()).norm() <= 1e-12);
        }
    }
}

#[test]
fn conformal_factor_removes_the_defect() {
    let acs = conformal(16, 11);
    let config = FactorConfig { target_ratio: 1e-14, ..Default::default() };
    let sol = conformal_gauduchon_factor(&acs, &config).unwrap();
    assert!(sol.f0 > 0.0);
    assert!(sol.ratio().sqrt() <= 1e-6, "L2 ratio {}", sol.ratio().sqrt());
    assert!(sol.history.windows(2).all(|w| w[1] <= w[0]));
    let solved = acs.with_metric(conformal_metric(acs.metric(), &sol.u).unwrap()).unwrap();
    let h = chern_from_metric(&solved).unwrap();
    let cs = curvature_scalars(&h.g, &h.omega).unwrap();
    let kg = kg_identity_residual(&h, &gauduchon_curvature(&cs), 2).unwrap();
    assert!(kg.residual.integrated.abs() <= 1e-5, "∫ residual {}", kg.residual.integrated);
}

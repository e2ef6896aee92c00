use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use ocs_core::constructions::{conformal_kahler, conformal_metric, FourierMode, TrigPoly};
use ocs_core::gridcalc::{differentiate, FlatChart, Slot, TensorField};
use ocs_core::hermitian::kahler_form;
use ocs_core::riemann::{covariant_derivative, curvature, curvature_scalars, weyl_min_eigenvalue, weyl_pairing};
use proptest::prelude::*;

fn unit_chart(res: usize) -> Arc<FlatChart> {
    Arc::new(FlatChart::unit(6, vec![0, 1], res).unwrap())
}

fn generic_metric(chart: &Arc<FlatChart>, seed: u64) -> TensorField {
    let s = seed as f64;
    TensorField::sample(chart.clone(), vec![Slot::Lower, Slot::Lower], move |x| {
        let mut a = DMatrix::<f64>::identity(6, 6) * 2.0;
        for i in 0..6 {
            for j in 0..6 {
                let ph = 2.0 * PI * (x[0] + ((i + j) % 2) as f64 * x[1]);
                a[(i, j)] += 0.15 * ((i * 5 + j * 11) as f64 + s + ph).sin();
            }
        }
        (a.transpose() * a).as_slice().to_vec()
    })
    .unwrap()
}

/// Second partials `∂_s ∂_t u` from the mode list.
fn hessian(u: &TrigPoly, x: &[f64], s: usize, t: usize) -> f64 {
    u.modes
        .iter()
        .map(|m| {
            let ph = 2.0 * PI * m.k.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum::<f64>();
            -4.0 * PI * PI * (m.k[s] * m.k[t]) as f64 * (m.cos * ph.cos() + m.sin * ph.sin())
        })
        .sum()
}

fn conformally_flat(res: usize, u: &TrigPoly) -> TensorField {
    let chart = unit_chart(res);
    let flat = TensorField::constant(chart.clone(), vec![Slot::Lower, Slot::Lower], DMatrix::<f64>::identity(6, 6).as_slice())
        .unwrap();
    conformal_metric(&flat, &u.sample(&chart).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn algebraic_symmetries_of_curvature(seed in 0u64..10_000) {
        let g = generic_metric(&unit_chart(8), seed);
        let pack = curvature(&g).unwrap();
        let r = pack.symmetry_residuals();
        prop_assert!(r.antisymmetry <= 1e-12);
        prop_assert!(r.pair_symmetry <= 1e-10);
        prop_assert!(r.first_bianchi <= 1e-10);
        prop_assert!(r.weyl_trace <= 1e-10);
        prop_assert!(pack.weyl_op.symmetry_residual() <= 1e-10 * pack.weyl_op.max_abs().max(1.0));
    }
}

#[test]
fn weyl_operator_is_trace_free() {
    let g = generic_metric(&unit_chart(16), 7);
    let pack = curvature(&g).unwrap();
    let s = pack.weyl_op.size;
    let scale = pack.weyl_op.max_abs().max(1.0);
    for p in 0..pack.weyl_op.num_points() {
        let m = pack.weyl_op.at(p);
        let tr: f64 = (0..s).map(|i| m[i * s + i]).sum();
        assert!(tr.abs() <= 1e-9 * scale, "trace {tr} at {p}");
    }
}

#[test]
fn conformally_flat_metric_has_vanishing_weyl_and_known_scalar() {
    let u = TrigPoly::random(2, 2, 0.2, 11);
    let g = conformally_flat(64, &u);
    let pack = curvature(&g).unwrap();
    let rscale = pack.riemann.max_abs();
    assert!(pack.weyl.max_abs() <= 1e-8 * rscale, "|W| = {}", pack.weyl.max_abs());
    let chart = g.chart().clone();
    let mut worst = 0.0_f64;
    for p in 0..chart.num_points() {
        let x = chart.point(p);
        let xa = [x[0], x[1]];
        let lap = hessian(&u, &xa, 0, 0) + hessian(&u, &xa, 1, 1);
        let grad2 = u.deriv(&xa, 0).powi(2) + u.deriv(&xa, 1).powi(2);
        let exact = -(-2.0 * u.eval(&xa)).exp() * (10.0 * lap + 20.0 * grad2);
        worst = worst.max((pack.scalar.at(p)[0] - exact).abs() / (1.0 + exact.abs()));
    }
    assert!(worst <= 1e-8, "scalar curvature error {worst}");
}

#[test]
fn contracted_bianchi_identity() {
    let u = TrigPoly::new(vec![
        FourierMode { k: vec![1, 0], cos: 0.1, sin: 0.05 },
        FourierMode { k: vec![1, 1], cos: -0.07, sin: 0.0 },
    ]);
    let g = conformally_flat(64, &u);
    let pack = curvature(&g).unwrap();
    let dric = covariant_derivative(&pack.ricci, &pack.gamma).unwrap();
    let ds: Vec<Option<TensorField>> =
        (0..6).map(|a| if a < 2 { Some(differentiate(&pack.scalar, a).unwrap()) } else { None }).collect();
    let n = 6;
    let scale = ds.iter().flatten().map(|f| f.max_abs()).fold(1.0, f64::max);
    let mut worst = 0.0_f64;
    for p in 0..g.num_points() {
        let gi = pack.ginv.at(p);
        let d = dric.at(p);
        for j in 0..n {
            let mut div = 0.0;
            for a in 0..n {
                for i in 0..n {
                    div += gi[a * n + i] * d[a * n * n + i * n + j];
                }
            }
            let half_ds = ds[j].as_ref().map_or(0.0, |f| 0.5 * f.at(p)[0]);
            worst = worst.max((div - half_ds).abs());
        }
    }
    assert!(worst <= 1e-8 * scale, "div Ric − ½dS = {worst}");
}

#[test]
fn pointwise_scalars_agree_with_full_pack() {
    let u = TrigPoly::random(2, 1, 0.15, 4);
    let q = ocs_core::constructions::random_orthogonal(6, 2);
    let acs = conformal_kahler(&unit_chart(16), &u, &q).unwrap();
    let omega = kahler_form(&acs);
    let pack = curvature(acs.metric()).unwrap();
    let cs = curvature_scalars(acs.metric(), &omega).unwrap();
    assert!(cs.scalar.sub(&pack.scalar).unwrap().max_abs() <= 1e-10);
    assert!(cs.weyl_min.sub(&weyl_min_eigenvalue(&pack).unwrap()).unwrap().max_abs() <= 1e-10);
    assert!(cs.weyl_omega.sub(&weyl_pairing(&pack, &omega).unwrap()).unwrap().max_abs() <= 1e-10);
}

#[test]
fn flat_metric_has_zero_curvature() {
    let chart = Arc::new(FlatChart::new(ocs_core::constructions::random_orthogonal(6, 9) * 1.3, vec![2, 5], 8).unwrap());
    let chart_metric = chart.coordinate_metric();
    let g = TensorField::constant(chart, vec![Slot::Lower, Slot::Lower], chart_metric.as_slice()).unwrap();
    let pack = curvature(&g).unwrap();
    assert_eq!(pack.riemann.max_abs(), 0.0);
    assert_eq!(pack.scalar.max_abs(), 0.0);
    assert_eq!(pack.weyl_op.max_abs(), 0.0);
}

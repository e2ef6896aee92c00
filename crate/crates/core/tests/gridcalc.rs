use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use ocs_core::gridcalc::io::{read_field, write_header, write_values};
use ocs_core::gridcalc::{
    contract, differentiate, integrate, inverse_metric, lower_index, raise_index, FlatChart, ScalarReport, Slot, TensorField,
};
use proptest::prelude::*;

/// `Σ a cos(2π k·x) + b sin(2π k·x)` with its analytic gradient.
#[derive(Debug, Clone)]
struct Poly(Vec<([i32; 2], f64, f64)>);

impl Poly {
    fn phase(k: &[i32; 2], x: &[f64]) -> f64 {
        2.0 * PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1])
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|(k, a, b)| a * Self::phase(k, x).cos() + b * Self::phase(k, x).sin()).sum()
    }

    fn deriv(&self, x: &[f64], s: usize) -> f64 {
        self.0
            .iter()
            .map(|(k, a, b)| {
                let ph = Self::phase(k, x);
                2.0 * PI * k[s] as f64 * (b * ph.cos() - a * ph.sin())
            })
            .sum()
    }
}

fn poly_strategy(max_freq: i32) -> impl Strategy<Value = Poly> {
    prop::collection::vec(((-max_freq..=max_freq, -max_freq..=max_freq), -1.0..1.0f64, -1.0..1.0f64), 1..6)
        .prop_map(|v| Poly(v.into_iter().map(|((k0, k1), a, b)| ([k0, k1], a, b)).collect()))
}

fn chart_on(axes: [usize; 2], res: usize) -> Arc<FlatChart> {
    Arc::new(FlatChart::unit(6, axes.to_vec(), res).unwrap())
}

fn sample(chart: &Arc<FlatChart>, f: impl Fn(&[f64]) -> f64 + Sync + Send) -> TensorField {
    let axes = chart.active_axes().to_vec();
    TensorField::sample(chart.clone(), vec![], move |x| vec![f(&[x[axes[0]], x[axes[1]]])]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spectral_derivative_of_band_limited_field(p in poly_strategy(7), phase in 0.0..1.0f64) {
        let res = 16;
        let chart = Arc::new(FlatChart::unit(6, vec![1, 4], res).unwrap().with_phase(phase));
        let f = sample(&chart, |x| p.eval(x));
        for (s, axis) in [1usize, 4].into_iter().enumerate() {
            let d = differentiate(&f, axis).unwrap();
            for q in 0..chart.num_points() {
                let x = chart.point(q);
                let exact = p.deriv(&[x[1], x[4]], s);
                prop_assert!((d.at(q)[0] - exact).abs() <= 1e-10 * (1.0 + exact.abs()));
            }
        }
    }

    #[test]
    fn derivative_integrates_to_zero(p in poly_strategy(12)) {
        let chart = chart_on([0, 1], 32);
        let f = sample(&chart, |x| (p.eval(x)).exp());
        for axis in [0, 1] {
            let d = differentiate(&f, axis).unwrap();
            prop_assert!(integrate(&d).unwrap().abs() <= 1e-11 * (1.0 + f.max_abs()));
        }
    }

    #[test]
    fn translation_equivariance(p in poly_strategy(6), s0 in 0isize..16, s1 in 0isize..16) {
        let res = 16;
        let chart = chart_on([2, 3], res);
        let v = [s0 as f64 / res as f64, s1 as f64 / res as f64];
        let f = sample(&chart, |x| p.eval(x));
        let shifted = sample(&chart, |x| p.eval(&[x[0] + v[0], x[1] + v[1]]));
        for q in 0..chart.num_points() {
            let i = chart.grid_index(q);
            let src = chart.flat_index(&[i[0] as isize + s0, i[1] as isize + s1]);
            prop_assert!((shifted.at(q)[0] - f.at(src)[0]).abs() <= 1e-12);
        }
        // Differentiation commutes with the shift.
        let d = differentiate(&f, 2).unwrap();
        let ds = differentiate(&shifted, 2).unwrap();
        for q in 0..chart.num_points() {
            let i = chart.grid_index(q);
            let src = chart.flat_index(&[i[0] as isize + s0, i[1] as isize + s1]);
            prop_assert!((ds.at(q)[0] - d.at(src)[0]).abs() <= 1e-9);
        }
    }

    #[test]
    fn report_ordering(values in prop::collection::vec(-1e3..1e3f64, 64)) {
        let r = ScalarReport::of_values(&values, 2.5);
        prop_assert!(r.min <= r.mean + 1e-12 && r.mean <= r.max + 1e-12);
        prop_assert!(r.l2_integral >= 0.0);
    }

    #[test]
    fn raise_then_lower_is_identity(seed in 0u64..1000) {
        let chart = chart_on([0, 1], 8);
        let g = smooth_metric(&chart, seed);
        let alpha = TensorField::sample(chart.clone(), vec![Slot::Lower, Slot::Lower], move |x| {
            (0..36).map(|c| ((c as f64 + 1.0) * (x[0] + 0.3 * x[1]) * 2.0 * PI + seed as f64).sin()).collect()
        }).unwrap();
        let back = lower_index(&raise_index(&alpha, &g, 0).unwrap(), &g, 0).unwrap();
        prop_assert!(back.sub(&alpha).unwrap().max_abs() <= 1e-11);
    }
}

/// A positive definite metric varying over the active axes.
fn smooth_metric(chart: &Arc<FlatChart>, seed: u64) -> TensorField {
    let s = seed as f64;
    TensorField::sample(chart.clone(), vec![Slot::Lower, Slot::Lower], move |x| {
        let mut a = DMatrix::<f64>::identity(6, 6) * 2.0;
        for i in 0..6 {
            for j in 0..6 {
                a[(i, j)] += 0.2 * ((i * 7 + j * 3) as f64 + s + 2.0 * PI * (x[0] + 2.0 * x[1])).sin();
            }
        }
        let m = a.transpose() * a;
        m.as_slice().to_vec()
    })
    .unwrap()
}

#[test]
fn mixed_partials_commute() {
    let chart = chart_on([0, 1], 32);
    let f = sample(&chart, |x| ((2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos()).exp());
    let xy = differentiate(&differentiate(&f, 0).unwrap(), 1).unwrap();
    let yx = differentiate(&differentiate(&f, 1).unwrap(), 0).unwrap();
    assert!(xy.sub(&yx).unwrap().max_abs() <= 1e-8);
}

#[test]
fn inactive_axes_have_zero_derivative() {
    let chart = chart_on([0, 1], 8);
    let f = sample(&chart, |x| (2.0 * PI * x[0]).sin() + x[1].cos());
    for axis in 2..6 {
        assert_eq!(differentiate(&f, axis).unwrap().max_abs(), 0.0);
    }
    assert!(differentiate(&f, 6).is_err());
}

#[test]
fn chart_geometry() {
    let b = DMatrix::from_fn(6, 6, |i, j| if i == j { 1.5 } else if j == i + 1 { 0.4 } else { 0.0 });
    let chart = FlatChart::new(b.clone(), vec![0, 3], 10).unwrap();
    assert!((chart.volume() - b.determinant().abs()).abs() < 1e-12);
    assert_eq!(chart.num_points(), 100);
    let x = chart.point(chart.flat_index(&[3, 7]));
    assert!((x[0] - 0.3).abs() < 1e-15 && (x[3] - 0.7).abs() < 1e-15 && x[1] == 0.0);
    // Wrap-around indexing is periodic.
    assert_eq!(chart.flat_index(&[13, -3]), chart.flat_index(&[3, 7]));
    assert!(FlatChart::new(DMatrix::zeros(6, 6), vec![0], 8).is_err());
    assert!(FlatChart::new(b.clone(), vec![0], 6).is_err());
    // Odd grids can be sampled but not differentiated.
    let odd = Arc::new(FlatChart::new(b, vec![0], 9).unwrap());
    let f = TensorField::sample(odd, vec![], |x| vec![(2.0 * PI * x[0]).sin()]).unwrap();
    assert!(differentiate(&f, 0).is_err());
}

#[test]
fn contraction_of_metric_with_inverse_is_dimension() {
    let chart = chart_on([0, 1], 8);
    let g = smooth_metric(&chart, 3);
    let ginv = inverse_metric(&g).unwrap();
    let mixed = raise_index(&g, &g, 0).unwrap();
    let tr = contract(&mixed, 0, 1).unwrap();
    for p in 0..chart.num_points() {
        assert!((tr.at(p)[0] - 6.0).abs() < 1e-12);
    }
    assert_eq!(ginv.variance(), &[Slot::Upper, Slot::Upper]);
}

#[test]
fn field_round_trip_through_io() {
    let chart = chart_on([0, 1], 8);
    let g = smooth_metric(&chart, 1);
    let (mut h, mut v) = (Vec::new(), Vec::new());
    write_header(&g, &mut h).unwrap();
    write_values(&g, &mut v).unwrap();
    let back = read_field(h.as_slice(), v.as_slice()).unwrap();
    assert_eq!(back.values(), g.values());
    assert_eq!(back.variance(), g.variance());
}

#[test]
fn non_finite_values_are_rejected() {
    let chart = chart_on([0, 1], 8);
    let mut vals = vec![0.0; chart.num_points()];
    vals[5] = f64::NAN;
    assert!(TensorField::new(chart, vec![], vals).is_err());
}

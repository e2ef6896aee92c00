//! Differentiation of grid fields along lattice-fraction coordinates.
//!
//! Active axes use Fourier differentiation (`F^-1 { 2 pi i k F{u} }`, Nyquist
//! mode dropped). Inactive axes return the zero field. A centered fourth-order
//! stencil is kept for diagnostics.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::chart::FlatChart;
use super::field::TensorField;
use crate::error::{Error, Result};

/// Derivative of `field` along coordinate `axis`.
///
/// Uses the field's exact jet when one is attached, otherwise spectral
/// differentiation. The result carries no jet.
pub fn differentiate(field: &TensorField, axis: usize) -> Result<TensorField> {
    let chart = field.chart().clone();
    if axis >= chart.dim() {
        return Err(Error::AxisOutOfRange { axis, dim: chart.dim() });
    }
    let Some(pos) = chart.active_position(axis) else {
        return Ok(TensorField::zeros(chart, field.variance().to_vec()));
    };
    if let Some(jet) = field.jet() {
        return Ok(TensorField::from_parts(chart, field.variance().to_vec(), jet[pos].clone()));
    }
    let values = spectral_real(&chart, field.ncomp(), field.values(), pos)?;
    Ok(TensorField::from_parts(chart, field.variance().to_vec(), values))
}

/// Derivatives along every coordinate axis, indexed by axis.
pub fn gradient(field: &TensorField) -> Result<Vec<TensorField>> {
    (0..field.dim()).map(|a| differentiate(field, a)).collect()
}

/// Centered fourth-order finite difference along `axis` (diagnostics only).
pub fn differentiate_fd4(field: &TensorField, axis: usize) -> Result<TensorField> {
    let chart = field.chart().clone();
    if axis >= chart.dim() {
        return Err(Error::AxisOutOfRange { axis, dim: chart.dim() });
    }
    let Some(pos) = chart.active_position(axis) else {
        return Ok(TensorField::zeros(chart, field.variance().to_vec()));
    };
    let n = field.ncomp();
    let h = 1.0 / chart.resolution() as f64;
    let shifted = |p: usize, s: isize| -> usize {
        let mut idx: Vec<isize> = chart.grid_index(p).into_iter().map(|i| i as isize).collect();
        idx[pos] += s;
        chart.flat_index(&idx)
    };
    let out = field.map_points(field.variance().to_vec(), |p, _, o| {
        let (m2, m1, p1, p2) = (shifted(p, -2), shifted(p, -1), shifted(p, 1), shifted(p, 2));
        for c in 0..n {
            let v = |q: usize| field.values()[q * n + c];
            o[c] = (-v(p2) + 8.0 * v(p1) - 8.0 * v(m1) + v(m2)) / (12.0 * h);
        }
    });
    Ok(out)
}

/// Spectral derivative of complex point-major data along active position `pos`.
pub fn spectral_complex(chart: &FlatChart, ncomp: usize, data: &[Complex64], pos: usize) -> Result<Vec<Complex64>> {
    let res = chart.resolution();
    if res % 2 != 0 {
        return Err(Error::OddResolution { resolution: res });
    }
    let npts = chart.num_points();
    let columns: Vec<Vec<Complex64>> = (0..ncomp)
        .into_par_iter()
        .map(|c| {
            let col: Vec<Complex64> = (0..npts).map(|p| data[p * ncomp + c]).collect();
            derive_column(chart, &col, pos)
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); npts * ncomp];
    for (c, col) in columns.into_iter().enumerate() {
        for (p, v) in col.into_iter().enumerate() {
            out[p * ncomp + c] = v;
        }
    }
    Ok(out)
}

fn spectral_real(chart: &FlatChart, ncomp: usize, data: &[f64], pos: usize) -> Result<Vec<f64>> {
    let res = chart.resolution();
    if res % 2 != 0 {
        return Err(Error::OddResolution { resolution: res });
    }
    let npts = chart.num_points();
    // Two real components share one complex transform: D is real, so
    // D(a + i b) = D a + i D b.
    let pairs: Vec<(usize, Vec<Complex64>)> = (0..ncomp.div_ceil(2))
        .into_par_iter()
        .map(|k| {
            let (a, b) = (2 * k, 2 * k + 1);
            let col: Vec<Complex64> = (0..npts)
                .map(|p| {
                    let im = if b < ncomp { data[p * ncomp + b] } else { 0.0 };
                    Complex64::new(data[p * ncomp + a], im)
                })
                .collect();
            (a, derive_column(chart, &col, pos))
        })
        .collect();
    let mut out = vec![0.0; npts * ncomp];
    for (a, col) in pairs {
        for (p, v) in col.into_iter().enumerate() {
            out[p * ncomp + a] = v.re;
            if a + 1 < ncomp {
                out[p * ncomp + a + 1] = v.im;
            }
        }
    }
    Ok(out)
}

fn derive_column(chart: &FlatChart, col: &[Complex64], pos: usize) -> Vec<Complex64> {
    let res = chart.resolution();
    let m = chart.active_axes().len();
    let stride = res.pow((m - 1 - pos) as u32);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(res);
    let inv = planner.plan_fft_inverse(res);
    let mult: Vec<Complex64> = (0..res)
        .map(|k| {
            let kappa = if 2 * k < res {
                k as f64
            } else if 2 * k == res {
                0.0
            } else {
                k as f64 - res as f64
            };
            Complex64::new(0.0, 2.0 * PI * kappa / res as f64)
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); col.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); res];
    for start in 0..col.len() {
        if (start / stride) % res != 0 {
            continue;
        }
        for (k, b) in buf.iter_mut().enumerate() {
            *b = col[start + k * stride];
        }
        fwd.process(&mut buf);
        for (b, w) in buf.iter_mut().zip(&mult) {
            *b *= w;
        }
        inv.process(&mut buf);
        for (k, b) in buf.iter().enumerate() {
            out[start + k * stride] = *b;
        }
    }
    out
}

/// Spectral derivative of point-major complex data along coordinate `axis`
/// of `chart`; inactive axes give zero.
pub fn differentiate_complex(chart: &Arc<FlatChart>, ncomp: usize, data: &[Complex64], axis: usize) -> Result<Vec<Complex64>> {
    if axis >= chart.dim() {
        return Err(Error::AxisOutOfRange { axis, dim: chart.dim() });
    }
    match chart.active_position(axis) {
        Some(pos) => spectral_complex(chart, ncomp, data, pos),
        None => Ok(vec![Complex64::new(0.0, 0.0); data.len()]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridcalc::field::{integrate, Slot};

    fn chart(res: usize) -> Arc<FlatChart> {
        Arc::new(FlatChart::unit(6, vec![0, 1], res).unwrap())
    }

    #[test]
    fn constant_has_zero_derivative() {
        let f = TensorField::sample(chart(16), vec![Slot::Lower], |_| vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        for a in 0..6 {
            assert!(differentiate(&f, a).unwrap().max_abs() <= 1e-13);
        }
    }

    #[test]
    fn sine_derivative_matches_analytic() {
        let c = chart(32);
        let f = TensorField::sample(c.clone(), vec![], |x| vec![(2.0 * PI * x[0]).sin()]).unwrap();
        let d = differentiate(&f, 0).unwrap();
        for p in 0..c.num_points() {
            let x = c.point(p);
            assert!((d.at(p)[0] - 2.0 * PI * (2.0 * PI * x[0]).cos()).abs() <= 1e-10);
        }
    }

    #[test]
    fn inactive_axis_gives_exact_zero() {
        let f = TensorField::sample(chart(8), vec![], |x| vec![x[0].sin()]).unwrap();
        let d = differentiate(&f, 4).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn odd_resolution_rejected() {
        let c = Arc::new(FlatChart::unit(2, vec![0], 9).unwrap());
        let f = TensorField::sample(c, vec![], |x| vec![x[0]]).unwrap();
        assert_eq!(differentiate(&f, 0).unwrap_err(), Error::OddResolution { resolution: 9 });
    }

    #[test]
    fn jet_is_preferred() {
        let c = chart(8);
        let f = TensorField::sample_with_jet(c, vec![], |x| vec![x[0]], |_, axis| vec![if axis == 0 { 7.0 } else { 0.0 }])
            .unwrap();
        assert!(differentiate(&f, 0).unwrap().values().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn fd4_is_fourth_order() {
        let err = |res: usize| {
            let c = chart(res);
            let f = TensorField::sample(c.clone(), vec![], |x| vec![(2.0 * PI * x[1]).sin()]).unwrap();
            let d = differentiate_fd4(&f, 1).unwrap();
            (0..c.num_points())
                .map(|p| (d.at(p)[0] - 2.0 * PI * (2.0 * PI * c.point(p)[1]).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(16) / err(32);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn derivative_integrates_to_zero() {
        let c = chart(16);
        let f = TensorField::sample(c, vec![], |x| vec![((2.0 * PI * x[0]).cos() + (2.0 * PI * x[1]).sin()).exp()]).unwrap();
        let d = differentiate(&f, 0).unwrap();
        assert!(integrate(&d).unwrap().abs() <= 1e-11);
    }
}

//! Example manifolds and complex structures: flat tori, constant and
//! conformally Kähler structures, twistor tori over an elliptic curve, the
//! round six-sphere and a non-Kähler Fubini–Study product.

pub mod bsv;
pub mod fubini_study;
pub mod sphere6;
pub mod twistor;
pub mod weierstrass;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridcalc::{FlatChart, Slot, TensorField};
use crate::hermitian::OrthogonalACS;

pub use bsv::{bsv, sphere_map_degree, BsvTorus, BSVSpec, MapKind};
pub use fubini_study::FubiniStudyProduct;
pub use sphere6::{s6_round, S6Point, S6Round};
pub use twistor::{twistor_j, TwistorFrame};
pub use weierstrass::{EllipticCurveSpec, Weierstrass};

/// Standard structure `J₀ e_{2i} = e_{2i+1}`, stored as `J[a][b] = J^a_b`.
pub fn standard_j(dim: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(dim, dim);
    for k in 0..dim / 2 {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    (0..r * c).map(|k| m[(k / c, k % c)]).collect()
}

/// Express a Euclidean endomorphism in lattice-fraction coordinates: `B⁻¹ A B`.
pub fn to_fraction_coords(chart: &FlatChart, a: &DMatrix<f64>) -> DMatrix<f64> {
    let b = chart.basis();
    let binv = b.clone().try_inverse().expect("chart basis is invertible");
    &binv * a * b
}

/// Chart over the lattice spanned by the columns of `basis` with its flat metric.
pub fn flat_torus(
    basis: DMatrix<f64>,
    active_axes: Vec<usize>,
    resolution: usize,
) -> Result<(Arc<FlatChart>, TensorField)> {
    let chart = Arc::new(FlatChart::new(basis, active_axes, resolution)?);
    let g = row_major(&chart.coordinate_metric());
    let metric = TensorField::constant(chart.clone(), vec![Slot::Lower, Slot::Lower], &g)?;
    Ok((chart, metric))
}

pub fn orthogonality_residual(q: &DMatrix<f64>) -> f64 {
    let n = q.nrows();
    (q.transpose() * q - DMatrix::<f64>::identity(n, n)).abs().max()
}

/// `J = Q J₀ Qᵀ` on the flat metric of `chart`.
pub fn constant_kahler(chart: &Arc<FlatChart>, q: &DMatrix<f64>) -> Result<OrthogonalACS> {
    let n = chart.dim();
    if q.shape() != (n, n) {
        return Err(Error::Shape(format!("Q must be {n}x{n}")));
    }
    let residual = orthogonality_residual(q);
    if residual > 1e-12 {
        return Err(Error::NotOrthogonal { residual });
    }
    let j_euc = q * standard_j(n) * q.transpose();
    let j = row_major(&to_fraction_coords(chart, &j_euc));
    let g = row_major(&chart.coordinate_metric());
    let jf = TensorField::constant(chart.clone(), vec![Slot::Upper, Slot::Lower], &j)?;
    let gf = TensorField::constant(chart.clone(), vec![Slot::Lower, Slot::Lower], &g)?;
    OrthogonalACS::new(jf, gf)
}

/// Seeded orthogonal matrix from the QR factorization of a uniform random matrix.
pub fn random_orthogonal(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..dim {
        if r[(k, k)] < 0.0 {
            for i in 0..dim {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    q
}

/// One real Fourier mode `a cos(2π k·x) + b sin(2π k·x)` over the active axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub k: Vec<i32>,
    pub cos: f64,
    pub sin: f64,
}

/// Real trigonometric polynomial on the active coordinates of a chart.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrigPoly {
    pub modes: Vec<FourierMode>,
}

impl TrigPoly {
    pub fn new(modes: Vec<FourierMode>) -> Self {
        Self { modes }
    }

    /// Seeded polynomial with every mode of max frequency `<= max_freq`
    /// (half-space representatives) and coefficients scaled so that the
    /// sup of the coefficients is `amplitude`.
    pub fn random(active: usize, max_freq: i32, amplitude: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = Vec::new();
        for k in half_space_modes(active, max_freq) {
            let c: f64 = rng.random_range(-1.0..1.0);
            let s: f64 = rng.random_range(-1.0..1.0);
            modes.push(FourierMode { k, cos: c, sin: s });
        }
        let m = modes.iter().map(|m| m.cos.abs().max(m.sin.abs())).fold(0.0, f64::max);
        for md in &mut modes {
            md.cos *= amplitude / m;
            md.sin *= amplitude / m;
        }
        Self { modes }
    }

    /// Value at the active coordinates `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let ph = 2.0 * PI * m.k.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum::<f64>();
                m.cos * ph.cos() + m.sin * ph.sin()
            })
            .sum()
    }

    /// Partial derivative along the `s`-th active coordinate.
    pub fn deriv(&self, x: &[f64], s: usize) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let ph = 2.0 * PI * m.k.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum::<f64>();
                2.0 * PI * m.k[s] as f64 * (m.sin * ph.cos() - m.cos * ph.sin())
            })
            .sum()
    }

    /// Sample on the active coordinates of `chart`.
    pub fn sample(&self, chart: &Arc<FlatChart>) -> Result<TensorField> {
        let axes = chart.active_axes().to_vec();
        TensorField::sample(chart.clone(), vec![], move |x| {
            let xa: Vec<f64> = axes.iter().map(|&a| x[a]).collect();
            vec![self.eval(&xa)]
        })
    }
}

/// Nonzero integer vectors with entries in `[-m, m]` and first nonzero entry positive.
pub fn half_space_modes(active: usize, m: i32) -> Vec<Vec<i32>> {
    let mut out = Vec::new();
    let side = (2 * m + 1) as usize;
    for code in 0..side.pow(active as u32) {
        let mut rem = code;
        let mut k = vec![0; active];
        for s in (0..active).rev() {
            k[s] = (rem % side) as i32 - m;
            rem /= side;
        }
        if let Some(first) = k.iter().find(|&&v| v != 0) {
            if *first > 0 {
                out.push(k);
            }
        }
    }
    out
}

/// Conformal rescaling `e^{2u} g` of a metric field by a sampled function `u`.
pub fn conformal_metric(g: &TensorField, u: &TensorField) -> Result<TensorField> {
    if u.rank() != 0 || u.num_points() != g.num_points() {
        return Err(Error::Shape("conformal factor must be a scalar field on the metric's chart".into()));
    }
    let out = g.map_points(g.variance().to_vec(), |p, gp, o| {
        let f = (2.0 * u.at(p)[0]).exp();
        for (x, y) in o.iter_mut().zip(gp) {
            *x = f * y;
        }
    });
    out.check_finite("conformal metric")?;
    Ok(out)
}

/// `J = Q J₀ Qᵀ` with the conformally flat metric `e^{2u} BᵀB`.
pub fn conformal_kahler(chart: &Arc<FlatChart>, u: &TrigPoly, q: &DMatrix<f64>) -> Result<OrthogonalACS> {
    let flat = constant_kahler(chart, q)?;
    let uf = u.sample(chart)?;
    let g = conformal_metric(flat.metric(), &uf)?;
    OrthogonalACS::new(flat.j().clone(), g)
}

/// `αE × α^{-1/2}T⁴` and `E × T⁴` carrying the same product structure.
#[derive(Debug, Clone)]
pub struct ScaledPair {
    pub alpha: f64,
    pub scaled: OrthogonalACS,
    pub unscaled: OrthogonalACS,
}

impl ScaledPair {
    /// Max componentwise difference between the two metrics.
    pub fn metric_gap(&self) -> f64 {
        self.scaled
            .metric()
            .at(0)
            .iter()
            .zip(self.unscaled.metric().at(0))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn volumes(&self) -> (f64, f64) {
        (self.scaled.metric().chart().volume(), self.unscaled.metric().chart().volume())
    }
}

/// Product structure `J_E ⊕ J_F` on `E × T⁴` with `E`, `T⁴` bases given.
/// Both scalings share the fraction-coordinate components of `J`.
pub fn scaled_product_pair(alpha: f64, e_basis: &DMatrix<f64>, f_basis: &DMatrix<f64>) -> Result<ScaledPair> {
    if !(alpha > 0.0) || alpha == 1.0 {
        return Err(Error::InvalidSpec(format!("alpha must be positive and different from 1, got {alpha}")));
    }
    if e_basis.shape() != (2, 2) || f_basis.shape() != (4, 4) {
        return Err(Error::Shape("expected a 2x2 curve basis and a 4x4 fiber basis".into()));
    }
    let build = |a: f64| -> Result<Arc<FlatChart>> {
        let mut b = DMatrix::zeros(6, 6);
        b.view_mut((0, 0), (2, 2)).copy_from(&(e_basis * a));
        b.view_mut((2, 2), (4, 4)).copy_from(&(f_basis / a.sqrt()));
        Ok(Arc::new(FlatChart::new(b, vec![], 8)?))
    };
    let c_alpha = build(alpha)?;
    let c_one = build(1.0)?;
    let j_euc = standard_j(6);
    let j = row_major(&to_fraction_coords(&c_one, &j_euc));
    let make = |c: &Arc<FlatChart>| -> Result<OrthogonalACS> {
        let g = row_major(&c.coordinate_metric());
        let jf = TensorField::constant(c.clone(), vec![Slot::Upper, Slot::Lower], &j)?;
        let gf = TensorField::constant(c.clone(), vec![Slot::Lower, Slot::Lower], &g)?;
        OrthogonalACS::with_tolerance(jf, gf, 1e-12)
    };
    Ok(ScaledPair { alpha, scaled: make(&c_alpha)?, unscaled: make(&c_one)? })
}

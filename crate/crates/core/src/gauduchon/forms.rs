//! Complex-valued differential forms on a chart, stored per point as a dense
//! array indexed by the bitmask of coordinate indices (`dx^I`, `I` increasing).

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gridcalc::{differentiate_complex, FlatChart, Slot, TensorField};
use crate::hermitian::kernels::{unitary_frame_at, PivotOrder};
use crate::hermitian::OrthogonalACS;
use crate::linalg::{complex_det, complex_invert};
use crate::riemann::kernels::i2;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sign of `dx^a ∧ dx^I` relative to `dx^{I ∪ a}`.
fn insert_sign(mask: u32, a: usize) -> f64 {
    if (mask & ((1u32 << a) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign of `dx^I ∧ dx^J` relative to `dx^{I ∪ J}` for disjoint `I`, `J`.
fn merge_sign(i: u32, j: u32) -> f64 {
    let mut inversions = 0;
    let mut rest = j;
    while rest != 0 {
        let b = rest.trailing_zeros();
        inversions += (i >> (b + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn bits(mask: u32) -> Vec<usize> {
    (0..32).filter(|&b| mask & (1 << b) != 0).collect()
}

/// Homogeneous form field of a given degree.
#[derive(Debug, Clone)]
pub struct FormField {
    chart: Arc<FlatChart>,
    degree: usize,
    coeffs: Vec<Complex64>,
}

impl FormField {
    pub fn zeros(chart: Arc<FlatChart>, degree: usize) -> Self {
        let n = chart.num_points() << chart.dim();
        Self { chart, degree, coeffs: vec![ZERO; n] }
    }

    pub fn chart(&self) -> &Arc<FlatChart> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn stride(&self) -> usize {
        1 << self.chart.dim()
    }

    pub fn at(&self, p: usize) -> &[Complex64] {
        let s = self.stride();
        &self.coeffs[p * s..(p + 1) * s]
    }

    /// Coefficient of `dx^I` at point `p`.
    pub fn get(&self, p: usize, mask: u32) -> Complex64 {
        self.at(p)[mask as usize]
    }

    /// Masks of the right degree, in increasing order.
    pub fn masks(&self) -> Vec<u32> {
        masks_of_degree(self.chart.dim(), self.degree)
    }

    /// `ω = Σ_{i<j} ω_ij dx^i ∧ dx^j` from an antisymmetric rank-2 field.
    pub fn from_two_form(t: &TensorField) -> Result<Self> {
        if t.variance() != [Slot::Lower, Slot::Lower] {
            return Err(Error::Variance("2-form must be (lower, lower)".into()));
        }
        let n = t.dim();
        let mut out = Self::zeros(t.chart().clone(), 2);
        let s = out.stride();
        for p in 0..t.num_points() {
            let v = t.at(p);
            for i in 0..n {
                for j in i + 1..n {
                    out.coeffs[p * s + ((1 << i) | (1 << j))] = Complex64::new(v[i2(n, i, j)], 0.0);
                }
            }
        }
        Ok(out)
    }

    /// `Σ α_i dx^i` from a 1-form field.
    pub fn from_one_form(t: &TensorField) -> Result<Self> {
        if t.variance() != [Slot::Lower] {
            return Err(Error::Variance("1-form must be (lower)".into()));
        }
        let mut out = Self::zeros(t.chart().clone(), 1);
        let s = out.stride();
        for p in 0..t.num_points() {
            for (i, v) in t.at(p).iter().enumerate() {
                out.coeffs[p * s + (1 << i)] = Complex64::new(*v, 0.0);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { chart: self.chart.clone(), degree: self.degree, coeffs: self.coeffs.iter().map(|v| v * c).collect() }
    }

    /// Multiply pointwise by a real function.
    pub fn scale_by(&self, f: &[f64]) -> Self {
        let s = self.stride();
        let coeffs = self.coeffs.iter().enumerate().map(|(k, v)| v * f[k / s]).collect();
        Self { chart: self.chart.clone(), degree: self.degree, coeffs }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.degree != other.degree || self.coeffs.len() != other.coeffs.len() {
            return Err(Error::Shape("form degrees or grids differ".into()));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { chart: self.chart.clone(), degree: self.degree, coeffs })
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Pointwise exterior product.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.coeffs.len() != other.coeffs.len() {
            return Err(Error::Shape("forms live on different grids".into()));
        }
        let dim = self.chart.dim();
        let degree = self.degree + other.degree;
        if degree > dim {
            return Ok(Self::zeros(self.chart.clone(), degree));
        }
        let s = self.stride();
        let (ma, mb) = (self.masks(), other.masks());
        let mut pairs = Vec::new();
        for &a in &ma {
            for &b in &mb {
                if a & b == 0 {
                    pairs.push((a, b, merge_sign(a, b)));
                }
            }
        }
        let mut coeffs = vec![ZERO; self.coeffs.len()];
        coeffs.par_chunks_mut(s).enumerate().for_each(|(p, out)| {
            let (x, y) = (&self.coeffs[p * s..(p + 1) * s], &other.coeffs[p * s..(p + 1) * s]);
            for &(a, b, sg) in &pairs {
                out[(a | b) as usize] += x[a as usize] * y[b as usize] * sg;
            }
        });
        Ok(Self { chart: self.chart.clone(), degree, coeffs })
    }

    /// `α^k` (`k ≥ 1`).
    pub fn power(&self, k: usize) -> Result<Self> {
        let mut out = self.clone();
        for _ in 1..k {
            out = out.wedge(self)?;
        }
        Ok(out)
    }

    /// Exterior derivative by spectral differentiation of the coefficients.
    pub fn d(&self) -> Result<Self> {
        let dim = self.chart.dim();
        let s = self.stride();
        let masks = self.masks();
        let mut out = Self::zeros(self.chart.clone(), self.degree + 1);
        for &axis in self.chart.active_axes() {
            let der = differentiate_complex(&self.chart, s, &self.coeffs, axis)?;
            let bit = 1u32 << axis;
            for &m in &masks {
                if m & bit != 0 {
                    continue;
                }
                let sg = insert_sign(m, axis);
                let target = (m | bit) as usize;
                for p in 0..self.chart.num_points() {
                    out.coeffs[p * s + target] += der[p * s + m as usize] * sg;
                }
            }
        }
        let _ = dim;
        Ok(out)
    }

    /// Coefficient of `dx^0 ∧ … ∧ dx^{dim−1}` at every point.
    pub fn top(&self) -> Vec<Complex64> {
        let s = self.stride();
        (0..self.chart.num_points()).map(|p| self.coeffs[p * s + s - 1]).collect()
    }
}

pub fn masks_of_degree(dim: usize, degree: usize) -> Vec<u32> {
    (0u32..(1 << dim)).filter(|m| m.count_ones() as usize == degree).collect()
}

/// Per-point complex coframe `φ = F dx` whose first half is of type `(1,0)`
/// and second half of type `(0,1)`, with `E = F⁻¹` so that `dx = E φ`.
#[derive(Debug, Clone)]
pub struct Coframes {
    dim: usize,
    f: Vec<Vec<Complex64>>,
    e: Vec<Vec<Complex64>>,
}

impl Coframes {
    pub fn new(acs: &OrthogonalACS) -> Result<Self> {
        let n = acs.dim();
        let half = n / 2;
        let chart = acs.j().chart().clone();
        let per: Vec<Result<(Vec<Complex64>, Vec<Complex64>)>> = (0..acs.j().num_points())
            .into_par_iter()
            .map(|p| {
                let g = acs.metric().at(p);
                let fr = unitary_frame_at(n, g, acs.j().at(p), PivotOrder::Ascending)
                    .ok_or_else(|| Error::RankDeficient { point: chart.grid_index(p) })?;
                let mut f = vec![ZERO; n * n];
                for jf in 0..half {
                    for b in 0..n {
                        let mut s = ZERO;
                        for a in 0..n {
                            s += fr[jf * n + a] * g[i2(n, a, b)];
                        }
                        // ē_jᵀ g is (1,0), e_jᵀ g is (0,1)
                        f[jf * n + b] = s.conj();
                        f[(half + jf) * n + b] = s;
                    }
                }
                let e = complex_invert(&f, n).ok_or_else(|| Error::RankDeficient { point: chart.grid_index(p) })?;
                Ok((f, e))
            })
            .collect();
        let mut f = Vec::with_capacity(per.len());
        let mut e = Vec::with_capacity(per.len());
        for r in per {
            let (a, b) = r?;
            f.push(a);
            e.push(b);
        }
        Ok(Self { dim: n, f, e })
    }
}

fn minor(m: &[Complex64], n: usize, rows: &[usize], cols: &[usize]) -> Complex64 {
    let k = rows.len();
    let mut sub: Vec<Complex64> = Vec::with_capacity(k * k);
    for &r in rows {
        for &c in cols {
            sub.push(m[r * n + c]);
        }
    }
    complex_det(&mut sub, k)
}

/// Number of `(1,0)` and `(0,1)` coframe indices in a frame mask.
fn bidegree_of(mask: u32, half: usize) -> (usize, usize) {
    let low = (mask & ((1u32 << half) - 1)).count_ones() as usize;
    (low, mask.count_ones() as usize - low)
}

/// The `(p, q)` component of a form.
#[derive(Debug, Clone)]
pub struct BidegreeForm {
    pub p: usize,
    pub q: usize,
    pub form: FormField,
}

/// Keep the `(p, q)` part of `form`, expressed again in coordinate coefficients.
pub fn bidegree_project(form: &FormField, p: usize, q: usize, frames: &Coframes) -> Result<BidegreeForm> {
    let dim = frames.dim;
    if form.chart().dim() != dim {
        return Err(Error::Shape("coframes and form have different dimensions".into()));
    }
    let mut out = FormField::zeros(form.chart().clone(), form.degree());
    if p + q != form.degree() {
        return Ok(BidegreeForm { p, q, form: out });
    }
    let half = dim / 2;
    let masks = form.masks();
    let keep: Vec<u32> = masks.iter().copied().filter(|&m| bidegree_of(m, half) == (p, q)).collect();
    let mbits: Vec<Vec<usize>> = masks.iter().map(|&m| bits(m)).collect();
    let kbits: Vec<Vec<usize>> = keep.iter().map(|&m| bits(m)).collect();
    let s = form.stride();
    out.coeffs.par_chunks_mut(s).enumerate().for_each(|(pt, o)| {
        let c = form.at(pt);
        let (f, e) = (&frames.f[pt], &frames.e[pt]);
        for (kb, _) in kbits.iter().zip(&keep) {
            // frame coefficient d_B = Σ_A c_A det E[A, B]
            let mut d = ZERO;
            for (ab, &am) in mbits.iter().zip(&masks) {
                let ca = c[am as usize];
                if ca != ZERO {
                    d += ca * minor(e, dim, ab, kb);
                }
            }
            if d == ZERO {
                continue;
            }
            // back to dx: c'_A += d_B det F[B, A]
            for (ab, &am) in mbits.iter().zip(&masks) {
                o[am as usize] += d * minor(f, dim, kb, ab);
            }
        }
    });
    Ok(BidegreeForm { p, q, form: out })
}

/// `max |α − Σ_{p+q=deg} α^{(p,q)}|`.
pub fn reassembly_residual(form: &FormField, frames: &Coframes) -> Result<f64> {
    let deg = form.degree();
    let mut sum = FormField::zeros(form.chart().clone(), deg);
    for p in 0..=deg {
        sum = sum.add(&bidegree_project(form, p, deg - p, frames)?.form)?;
    }
    Ok(sum.add(&form.scale(Complex64::new(-1.0, 0.0)))?.max_abs())
}

//! Levi-Civita connection, curvature, Weyl tensor, the Weyl operator on
//! 2-forms and the G-curvature.

pub mod kernels;

use rayon::prelude::*;

use crate::constants;
use crate::error::{Error, Result};
use crate::gridcalc::algebra::{flatten, unflatten};
use crate::gridcalc::{differentiate, inverse_metric, Slot, TensorField};
use kernels::{i2, i3, i4, pair_basis, PointCurvature};

/// A symmetric operator on 2-forms at every grid point, in the orthonormal
/// pair basis returned by [`kernels::pair_basis`].
#[derive(Debug, Clone)]
pub struct PairOperatorField {
    pub size: usize,
    pub pairs: Vec<(usize, usize)>,
    values: Vec<f64>,
}

impl PairOperatorField {
    pub fn at(&self, p: usize) -> &[f64] {
        let s = self.size * self.size;
        &self.values[p * s..(p + 1) * s]
    }

    pub fn num_points(&self) -> usize {
        self.values.len() / (self.size * self.size).max(1)
    }

    /// Largest `|M − M^T|` entry over the grid.
    pub fn symmetry_residual(&self) -> f64 {
        let s = self.size;
        (0..self.num_points())
            .map(|p| {
                let m = self.at(p);
                let mut r = 0.0_f64;
                for i in 0..s {
                    for j in 0..s {
                        r = r.max((m[i * s + j] - m[j * s + i]).abs());
                    }
                }
                r
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Levi-Civita and curvature data of a metric on a grid.
#[derive(Debug, Clone)]
pub struct CurvaturePack {
    pub g: TensorField,
    pub ginv: TensorField,
    pub gamma: TensorField,
    pub riemann: TensorField,
    pub ricci: TensorField,
    pub scalar: TensorField,
    pub weyl: TensorField,
    pub weyl_op: PairOperatorField,
}

/// First and second coordinate derivatives of a field, indexed by axis;
/// `None` along inactive axes.
pub(crate) type Derivs = (Vec<Option<TensorField>>, Vec<Vec<Option<TensorField>>>);

pub(crate) fn first_and_second(field: &TensorField) -> Result<Derivs> {
    let n = field.dim();
    let active = field.chart().active_axes().to_vec();
    let mut d1: Vec<Option<TensorField>> = vec![None; n];
    for &a in &active {
        d1[a] = Some(differentiate(field, a)?);
    }
    let mut d2: Vec<Vec<Option<TensorField>>> = vec![vec![None; n]; n];
    for &a in &active {
        for &b in &active {
            if b < a {
                d2[a][b] = d2[b][a].clone();
            } else {
                d2[a][b] = Some(differentiate(d1[a].as_ref().unwrap(), b)?);
            }
        }
    }
    Ok((d1, d2))
}

/// First derivatives along active axes, `None` elsewhere.
pub(crate) fn first_derivatives(field: &TensorField) -> Result<Vec<Option<TensorField>>> {
    let n = field.dim();
    let mut d1: Vec<Option<TensorField>> = vec![None; n];
    for &a in field.chart().active_axes() {
        d1[a] = Some(differentiate(field, a)?);
    }
    Ok(d1)
}

pub(crate) fn slices_at(d: &[Option<TensorField>], p: usize) -> Vec<Option<&[f64]>> {
    d.iter().map(|f| f.as_ref().map(|f| f.at(p))).collect()
}

fn check_metric(g: &TensorField) -> Result<()> {
    if g.variance() != [Slot::Lower, Slot::Lower] {
        return Err(Error::Variance("metric must be (lower, lower)".into()));
    }
    g.check_finite("metric")
}

/// Levi-Civita symbols `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
pub fn christoffel(g: &TensorField) -> Result<TensorField> {
    check_metric(g)?;
    let n = g.dim();
    let ginv = inverse_metric(g)?;
    let dg = first_derivatives(g)?;
    Ok(g.map_points(vec![Slot::Upper, Slot::Lower, Slot::Lower], |p, _, o| {
        o.copy_from_slice(&kernels::christoffel_at(n, ginv.at(p), &slices_at(&dg, p)));
    }))
}

/// Full curvature pack of `g`.
pub fn curvature(g: &TensorField) -> Result<CurvaturePack> {
    check_metric(g)?;
    let n = g.dim();
    let chart = g.chart().clone();
    let ginv = inverse_metric(g)?;
    let (d1, d2) = first_and_second(g)?;
    let points: Vec<Option<PointCurvature>> = (0..g.num_points())
        .into_par_iter()
        .map(|p| {
            let dg = slices_at(&d1, p);
            let ddg: Vec<Vec<Option<&[f64]>>> = d2.iter().map(|row| slices_at(row, p)).collect();
            PointCurvature::evaluate(n, g.at(p), &dg, &ddg)
        })
        .collect();
    let np = points.len();
    let pairs = pair_basis(n);
    let size = pairs.len();
    let (mut gamma, mut riem, mut ric, mut scal, mut weyl, mut wop) = (
        Vec::with_capacity(np * n * n * n),
        Vec::with_capacity(np * n.pow(4)),
        Vec::with_capacity(np * n * n),
        Vec::with_capacity(np),
        Vec::with_capacity(np * n.pow(4)),
        Vec::with_capacity(np * size * size),
    );
    for (p, pc) in points.into_iter().enumerate() {
        let Some(pc) = pc else {
            let det = nalgebra::DMatrix::from_row_slice(n, n, g.at(p)).determinant();
            return Err(Error::SingularMetric { point: chart.grid_index(p), det });
        };
        gamma.extend(pc.gamma);
        riem.extend(pc.riemann);
        ric.extend(pc.ricci);
        scal.push(pc.scalar);
        weyl.extend(pc.weyl);
        wop.extend(pc.weyl_op);
    }
    let l = Slot::Lower;
    let pack = CurvaturePack {
        g: g.clone().without_jet(),
        ginv,
        gamma: TensorField::new(chart.clone(), vec![Slot::Upper, l, l], gamma)?,
        riemann: TensorField::new(chart.clone(), vec![l; 4], riem)?,
        ricci: TensorField::new(chart.clone(), vec![l, l], ric)?,
        scalar: TensorField::new(chart.clone(), vec![], scal)?,
        weyl: TensorField::new(chart, vec![l; 4], weyl)?,
        weyl_op: PairOperatorField { size, pairs, values: wop },
    };
    pack.weyl_op.values.iter().position(|v| !v.is_finite()).map_or(Ok(()), |i| {
        Err(Error::NonFinite { what: "weyl operator".into(), point: pack.g.chart().grid_index(i / (size * size)) })
    })?;
    Ok(pack)
}

/// Weyl operator on 2-forms recomputed from `W` and `g` (orthonormal pair basis).
pub fn weyl_two_form_operator(pack: &CurvaturePack) -> Result<PairOperatorField> {
    let n = pack.g.dim();
    let pairs = pair_basis(n);
    let size = pairs.len();
    let chart = pack.g.chart();
    let per_point: Vec<Option<Vec<f64>>> = (0..pack.g.num_points())
        .into_par_iter()
        .map(|p| kernels::orthonormal_frame(n, pack.g.at(p)).map(|e| kernels::weyl_operator_at(n, &e, pack.weyl.at(p))))
        .collect();
    let mut values = Vec::with_capacity(per_point.len() * size * size);
    for (p, v) in per_point.into_iter().enumerate() {
        match v {
            Some(v) => values.extend(v),
            None => return Err(Error::SingularMetric { point: chart.grid_index(p), det: f64::NAN }),
        }
    }
    Ok(PairOperatorField { size, pairs, values })
}

/// Smallest eigenvalue of the Weyl operator at every point.
pub fn weyl_min_eigenvalue(pack: &CurvaturePack) -> Result<TensorField> {
    let size = pack.weyl_op.size;
    let mins: Vec<Option<f64>> = (0..pack.g.num_points())
        .into_par_iter()
        .map(|p| kernels::symmetric_eigenvalues(size, pack.weyl_op.at(p)).map(|ev| ev[0]))
        .collect();
    let mut out = Vec::with_capacity(mins.len());
    for (p, m) in mins.into_iter().enumerate() {
        out.push(m.ok_or_else(|| Error::Eigen { point: pack.g.chart().grid_index(p) })?);
    }
    TensorField::new(pack.g.chart().clone(), vec![], out)
}

/// `G = (2n−2)/(2n−1) S − λ_min(W_op)`, with `n` the complex dimension.
pub fn g_curvature(pack: &CurvaturePack) -> Result<TensorField> {
    let c = constants::scalar_coeff(pack.g.dim() / 2);
    let lmin = weyl_min_eigenvalue(pack)?;
    Ok(pack.scalar.map_points(vec![], |p, s, o| o[0] = c * s[0] - lmin.at(p)[0]))
}

/// `⟨W(α), α⟩` for a lower-index 2-form field `alpha`.
pub fn weyl_pairing(pack: &CurvaturePack, alpha: &TensorField) -> Result<TensorField> {
    if alpha.variance() != [Slot::Lower, Slot::Lower] {
        return Err(Error::Variance("2-form must be (lower, lower)".into()));
    }
    let n = alpha.dim();
    Ok(alpha.map_points(vec![], |p, a, o| {
        o[0] = kernels::weyl_pairing_at(n, pack.ginv.at(p), pack.weyl.at(p), a);
    }))
}

/// Scalar curvature, `⟨W(ω), ω⟩` and the smallest Weyl-operator eigenvalue,
/// computed point by point without storing rank-4 fields.
#[derive(Debug, Clone)]
pub struct CurvatureScalars {
    pub scalar: TensorField,
    pub weyl_omega: TensorField,
    pub weyl_min: TensorField,
}

impl CurvatureScalars {
    pub fn from_pack(pack: &CurvaturePack, omega: &TensorField) -> Result<Self> {
        Ok(Self { scalar: pack.scalar.clone(), weyl_omega: weyl_pairing(pack, omega)?, weyl_min: weyl_min_eigenvalue(pack)? })
    }

    /// `G = (2n−2)/(2n−1) S − λ_min(W_op)`.
    pub fn g_curvature(&self) -> TensorField {
        let c = constants::scalar_coeff(self.scalar.dim() / 2);
        self.scalar.map_points(vec![], |p, s, o| o[0] = c * s[0] - self.weyl_min.at(p)[0])
    }
}

pub fn curvature_scalars(g: &TensorField, omega: &TensorField) -> Result<CurvatureScalars> {
    check_metric(g)?;
    if omega.variance() != [Slot::Lower, Slot::Lower] {
        return Err(Error::Variance("2-form must be (lower, lower)".into()));
    }
    let n = g.dim();
    let chart = g.chart().clone();
    let size = pair_basis(n).len();
    let (d1, d2) = first_and_second(g)?;
    let per_point: Vec<Option<[f64; 3]>> = (0..g.num_points())
        .into_par_iter()
        .map(|p| {
            let dg = slices_at(&d1, p);
            let ddg: Vec<Vec<Option<&[f64]>>> = d2.iter().map(|row| slices_at(row, p)).collect();
            let pc = PointCurvature::evaluate(n, g.at(p), &dg, &ddg)?;
            let wp = kernels::weyl_pairing_at(n, &pc.ginv, &pc.weyl, omega.at(p));
            let lmin = kernels::symmetric_eigenvalues(size, &pc.weyl_op)?[0];
            Some([pc.scalar, wp, lmin])
        })
        .collect();
    let np = per_point.len();
    let (mut s, mut w, mut l) = (Vec::with_capacity(np), Vec::with_capacity(np), Vec::with_capacity(np));
    for (p, v) in per_point.into_iter().enumerate() {
        let Some([a, b, c]) = v else {
            return Err(Error::SingularMetric { point: chart.grid_index(p), det: f64::NAN });
        };
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::NonFinite { what: "curvature scalars".into(), point: chart.grid_index(p) });
        }
        s.push(a);
        w.push(b);
        l.push(c);
    }
    Ok(CurvatureScalars {
        scalar: TensorField::new(chart.clone(), vec![], s)?,
        weyl_omega: TensorField::new(chart.clone(), vec![], w)?,
        weyl_min: TensorField::new(chart, vec![], l)?,
    })
}

/// Levi-Civita covariant derivative; the new lower slot comes first:
/// `(∇T)_{a, ...} = ∇_a T_{...}`.
pub fn covariant_derivative(field: &TensorField, gamma: &TensorField) -> Result<TensorField> {
    let n = field.dim();
    let r = field.rank();
    let d = first_derivatives(field)?;
    let mut variance = vec![Slot::Lower];
    variance.extend_from_slice(field.variance());
    let slots = field.variance().to_vec();
    let nc = field.ncomp();
    Ok(field.map_points(variance, |p, t, o| {
        let gm = gamma.at(p);
        for a in 0..n {
            for c in 0..nc {
                let idx = unflatten(c, n, r);
                let mut v = d[a].as_ref().map_or(0.0, |f| f.at(p)[c]);
                let mut j = idx.clone();
                for (s, slot) in slots.iter().enumerate() {
                    for m in 0..n {
                        j[s] = m;
                        let tv = t[flatten(&j, n)];
                        v += match slot {
                            Slot::Upper => gm[i3(n, idx[s], a, m)] * tv,
                            Slot::Lower => -gm[i3(n, m, a, idx[s])] * tv,
                        };
                    }
                    j[s] = idx[s];
                }
                o[a * nc + c] = v;
            }
        }
    }))
}

/// Maximal residuals of the algebraic curvature identities, each relative to
/// `max |R|` (absolute when `R` vanishes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryResiduals {
    pub antisymmetry: f64,
    pub pair_symmetry: f64,
    pub first_bianchi: f64,
    pub weyl_trace: f64,
}

impl CurvaturePack {
    pub fn symmetry_residuals(&self) -> SymmetryResiduals {
        let n = self.g.dim();
        let scale = self.riemann.max_abs().max(1.0);
        let mut out = SymmetryResiduals { antisymmetry: 0.0, pair_symmetry: 0.0, first_bianchi: 0.0, weyl_trace: 0.0 };
        for p in 0..self.g.num_points() {
            let r = self.riemann.at(p);
            let w = self.weyl.at(p);
            let gi = self.ginv.at(p);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let v = r[i4(n, i, j, k, l)];
                            out.antisymmetry = out
                                .antisymmetry
                                .max((v + r[i4(n, j, i, k, l)]).abs())
                                .max((v + r[i4(n, i, j, l, k)]).abs());
                            out.pair_symmetry = out.pair_symmetry.max((v - r[i4(n, k, l, i, j)]).abs());
                            out.first_bianchi = out
                                .first_bianchi
                                .max((v + r[i4(n, i, k, l, j)] + r[i4(n, i, l, j, k)]).abs());
                        }
                    }
                    for l in 0..n {
                        let tr: f64 = (0..n)
                            .flat_map(|a| (0..n).map(move |b| (a, b)))
                            .map(|(a, b)| gi[i2(n, a, b)] * w[i4(n, a, j, b, l)])
                            .sum();
                        out.weyl_trace = out.weyl_trace.max(tr.abs());
                    }
                }
            }
        }
        out.antisymmetry /= scale;
        out.pair_symmetry /= scale;
        out.first_bianchi /= scale;
        out.weyl_trace /= scale;
        out
    }
}

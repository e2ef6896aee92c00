//! Deformations of orthogonal almost complex structures, Nijenhuis-energy
//! search, and the degree-sweep and bound-audit experiments.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants;
use crate::constructions::{bsv, half_space_modes, BSVSpec, EllipticCurveSpec, MapKind};
use crate::error::{Error, Result};
use crate::gauduchon::{gauduchon_curvature, torsion_bound_slack};
use crate::gridcalc::{FlatChart, ScalarReport, Slot, TensorField};
use crate::hermitian::kernels::Frame;
use crate::hermitian::{chern_from_metric, identity_audits, nijenhuis_energy_of, nijenhuis_of, OrthogonalACS};
use crate::riemann::curvature_scalars;

/// Exponentials of fields whose pointwise Frobenius norm exceeds this are rejected.
pub const MAX_EXP_NORM: f64 = 50.0;

fn dmat(v: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, v)
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    (0..r * c).map(|k| m[(k / c, k % c)]).collect()
}

/// A `g`-skew `(1,1)` field, optionally with the coefficients that generated it.
#[derive(Debug, Clone)]
pub struct PerturbationField {
    pub a: TensorField,
    pub basis_coeffs: Option<Vec<f64>>,
}

impl PerturbationField {
    pub fn new(a: TensorField) -> Result<Self> {
        if a.variance() != [Slot::Upper, Slot::Lower] {
            return Err(Error::Variance("perturbation must be (upper, lower)".into()));
        }
        Ok(Self { a, basis_coeffs: None })
    }

    pub fn zeros(chart: Arc<FlatChart>) -> Self {
        Self { a: TensorField::zeros(chart, vec![Slot::Upper, Slot::Lower]), basis_coeffs: None }
    }

    /// `max |g a + (g a)ᵀ|`.
    pub fn skew_residual(&self, g: &TensorField) -> f64 {
        let n = self.a.dim();
        let mut r = 0.0_f64;
        for p in 0..self.a.num_points() {
            let ga = dmat(g.at(p), n) * dmat(self.a.at(p), n);
            r = r.max((&ga + ga.transpose()).abs().max());
        }
        r
    }

    /// Largest pointwise norm of `a` measured with `g`.
    pub fn max_norm(&self, g: &TensorField) -> f64 {
        let n = self.a.dim();
        (0..self.a.num_points())
            .map(|p| Frame::new(n, g.at(p)).map_or(f64::NAN, |f| f.norm_sq(n, self.a.at(p), &[true, false]).sqrt()))
            .fold(0.0, f64::max)
    }
}

/// Truncated Fourier parametrization of `g`-skew fields anticommuting with a
/// reference structure: `a(x) = Σ c_{m,s} φ_m(x) A_s`.
#[derive(Debug, Clone)]
pub struct PerturbationBasis {
    chart: Arc<FlatChart>,
    generators: Vec<Vec<f64>>,
    modes: Vec<Vec<f64>>,
    /// Largest `|k_i|` of each spatial mode.
    freqs: Vec<usize>,
}

impl PerturbationBasis {
    /// Generators from `J` and `g` at grid point 0; spatial modes up to `max_freq`
    /// (default `resolution / 4`), including the constant mode.
    pub fn new(acs: &OrthogonalACS, max_freq: Option<usize>) -> Result<Self> {
        let chart = acs.j().chart().clone();
        let n = acs.dim();
        let frame = Frame::new(n, acs.metric().at(0)).ok_or(Error::SingularMetric { point: chart.grid_index(0), det: 0.0 })?;
        let e = dmat(&frame.e, n);
        let einv = dmat(&frame.e_inv, n);
        let jf = &einv * dmat(acs.j().at(0), n) * &e;
        let mut gens: Vec<DMatrix<f64>> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let mut s = DMatrix::zeros(n, n);
                s[(i, j)] = 1.0;
                s[(j, i)] = -1.0;
                let mut v = (&s + &jf * &s * &jf) * 0.5;
                for gq in &gens {
                    let d = v.dot(gq);
                    v -= gq * d;
                }
                let nv = v.norm();
                if nv > 1e-8 {
                    gens.push(v / nv);
                }
            }
        }
        let generators = gens.iter().map(|s| row_major(&(&e * s * &einv))).collect();
        let active = chart.active_axes().to_vec();
        let mf = max_freq.unwrap_or(chart.resolution() / 4).max(1) as i32;
        let mut modes = vec![vec![1.0; chart.num_points()]];
        let mut freqs = vec![0];
        for k in half_space_modes(active.len(), mf) {
            for trig in 0..2 {
                freqs.push(k.iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(0));
                modes.push(
                    (0..chart.num_points())
                        .map(|p| {
                            let x = chart.point(p);
                            let ph = 2.0 * PI * active.iter().zip(&k).map(|(&a, &ki)| ki as f64 * x[a]).sum::<f64>();
                            if trig == 0 {
                                ph.cos()
                            } else {
                                ph.sin()
                            }
                        })
                        .collect(),
                );
            }
        }
        Ok(Self { chart, generators, modes, freqs })
    }

    pub fn len(&self) -> usize {
        self.generators.len() * self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn field(&self, c: &[f64]) -> Result<PerturbationField> {
        if c.len() != self.len() {
            return Err(Error::Shape(format!("expected {} coefficients, got {}", self.len(), c.len())));
        }
        let n = self.chart.dim();
        let ng = self.generators.len();
        let np = self.chart.num_points();
        let mut vals = vec![0.0; np * n * n];
        for (m, mode) in self.modes.iter().enumerate() {
            for (s, gen) in self.generators.iter().enumerate() {
                let cm = c[m * ng + s];
                if cm == 0.0 {
                    continue;
                }
                for p in 0..np {
                    let w = cm * mode[p];
                    for (o, gv) in vals[p * n * n..(p + 1) * n * n].iter_mut().zip(gen) {
                        *o += w * gv;
                    }
                }
            }
        }
        let a = TensorField::new(self.chart.clone(), vec![Slot::Upper, Slot::Lower], vals)?;
        Ok(PerturbationField { a, basis_coeffs: Some(c.to_vec()) })
    }

    /// Seeded coefficients on modes of frequency `<= max_freq`, scaled so the
    /// field has pointwise max norm `norm` under `g`.
    pub fn random_coeffs(&self, g: &TensorField, norm: f64, max_freq: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ng = self.generators.len();
        let mut c = vec![0.0; self.len()];
        for (m, &f) in self.freqs.iter().enumerate() {
            if f <= max_freq {
                for s in 0..ng {
                    c[m * ng + s] = rng.random_range(-1.0..1.0);
                }
            }
        }
        let f = self.field(&c)?;
        let scale = norm / f.max_norm(g);
        Ok(c.into_iter().map(|v| v * scale).collect())
    }
}

/// `J = exp(a) J₀ exp(−a)` pointwise.
pub fn retract(j0: &OrthogonalACS, a: &PerturbationField) -> Result<OrthogonalACS> {
    let n = j0.dim();
    if a.a.num_points() != j0.j().num_points() {
        return Err(Error::Shape("perturbation and structure grids differ".into()));
    }
    let mut vals = Vec::with_capacity(j0.j().values().len());
    for p in 0..j0.j().num_points() {
        let am = dmat(a.a.at(p), n);
        let norm = am.norm();
        if !(norm <= MAX_EXP_NORM) {
            return Err(Error::ExpOverflow { norm });
        }
        if norm == 0.0 {
            vals.extend_from_slice(j0.j().at(p));
            continue;
        }
        let u = am.clone().exp();
        let uinv = (-am).exp();
        vals.extend(row_major(&(u * dmat(j0.j().at(p), n) * uinv)));
    }
    let j = TensorField::new(j0.j().chart().clone(), vec![Slot::Upper, Slot::Lower], vals)?;
    OrthogonalACS::new(j, j0.metric().clone())
}

/// `∫ |N|² dV`.
pub fn nijenhuis_energy(acs: &OrthogonalACS) -> Result<f64> {
    nijenhuis_energy_of(acs.j(), acs.metric())
}

/// Nijenhuis components in an orthonormal frame, weighted so that the squared
/// sum equals the energy.
fn nijenhuis_residual(acs: &OrthogonalACS) -> Result<Vec<f64>> {
    let n = acs.dim();
    let nij = nijenhuis_of(acs.j())?;
    let w = (acs.j().chart().volume() / nij.num_points() as f64).sqrt();
    let mut out = Vec::with_capacity(nij.values().len());
    for p in 0..nij.num_points() {
        let f = Frame::new(n, acs.metric().at(p)).ok_or(Error::SingularMetric { point: vec![p], det: 0.0 })?;
        out.extend(f.components(n, nij.at(p), &[true, false, false]).into_iter().map(|v| v * w));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Initial damping of the Gauss–Newton steps.
    pub step: f64,
    pub max_iters: usize,
    /// Finite-difference step for the Jacobian columns.
    pub grad_eps: f64,
    /// Target energy.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { step: 1e-3, max_iters: 200, grad_eps: 1e-7, tol: 1e-14, seed: 7 }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.grad_eps > 0.0 && self.tol > 0.0 && self.max_iters > 0) {
            return Err(Error::InvalidSpec("search step, grad_eps, tol and max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    pub iteration: usize,
    pub energy: f64,
    /// Euclidean length of the accepted coefficient update.
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct SearchTrajectory {
    pub steps: Vec<SearchStep>,
    pub coeffs: Vec<f64>,
    pub stalled: bool,
    pub converged: bool,
}

impl SearchTrajectory {
    pub fn initial_energy(&self) -> f64 {
        self.steps.first().map_or(0.0, |s| s.energy)
    }

    pub fn final_energy(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.energy)
    }

    pub fn is_monotone(&self) -> bool {
        self.steps.windows(2).all(|w| w[1].energy <= w[0].energy)
    }
}

/// Minimize the Nijenhuis energy of `retract(J₀, a(c))` over the coefficients
/// `c`, starting from `c0`, by damped Gauss–Newton steps with finite-difference
/// Jacobians. Only energy-decreasing steps are accepted.
pub fn minimize(j0: &OrthogonalACS, basis: &PerturbationBasis, c0: &[f64], config: &SearchConfig) -> Result<SearchTrajectory> {
    config.validate()?;
    let eval = |c: &[f64]| -> Result<Vec<f64>> { nijenhuis_residual(&retract(j0, &basis.field(c)?)?) };
    let m = basis.len();
    let mut c = c0.to_vec();
    let mut r = eval(&c)?;
    let mut energy: f64 = r.iter().map(|v| v * v).sum();
    let mut steps = vec![SearchStep { iteration: 0, energy, step: 0.0 }];
    let mut lambda = config.step;
    let mut stalled = false;
    for it in 1..=config.max_iters {
        if energy <= config.tol {
            break;
        }
        let cols: Vec<Result<Vec<f64>>> = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut cp = c.clone();
                cp[i] += config.grad_eps;
                let rp = eval(&cp)?;
                Ok(rp.iter().zip(&r).map(|(a, b)| (a - b) / config.grad_eps).collect())
            })
            .collect();
        let mut jac = DMatrix::zeros(r.len(), m);
        for (i, col) in cols.into_iter().enumerate() {
            for (row, v) in col?.into_iter().enumerate() {
                jac[(row, i)] = v;
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * DVector::from_column_slice(&r);
        let mut accepted = None;
        for _ in 0..16 {
            let mut a = jtj.clone();
            for i in 0..m {
                a[(i, i)] += lambda * (jtj[(i, i)] + 1e-12);
            }
            if let Some(delta) = a.lu().solve(&(-&grad)) {
                let trial: Vec<f64> = c.iter().zip(delta.iter()).map(|(x, d)| x + d).collect();
                if let Ok(rt) = eval(&trial) {
                    let et: f64 = rt.iter().map(|v| v * v).sum();
                    if et < energy {
                        accepted = Some((trial, rt, et, delta.norm()));
                        lambda = (lambda / 5.0).max(1e-12);
                        break;
                    }
                }
            }
            lambda *= 10.0;
        }
        match accepted {
            Some((trial, rt, et, len)) => {
                c = trial;
                r = rt;
                energy = et;
                steps.push(SearchStep { iteration: it, energy, step: len });
            }
            None => {
                stalled = true;
                break;
            }
        }
    }
    Ok(SearchTrajectory { converged: energy <= config.tol, steps, coeffs: c, stalled })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub degree: u32,
    pub resolution: usize,
    pub torsion_l2: f64,
    pub predicted: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub fiber_volume: f64,
    pub rows: Vec<SweepRow>,
    /// Least-squares slope and intercept of `torsion_l2` against the degree.
    pub slope: f64,
    pub intercept: f64,
    /// `|slope − 32π v₂| / (32π v₂)`.
    pub slope_relative_error: f64,
}

impl SweepTable {
    pub fn is_monotone(&self) -> bool {
        let mut rows = self.rows.clone();
        rows.sort_by_key(|r| (r.resolution, r.degree));
        rows.windows(2).all(|w| w[0].resolution != w[1].resolution || w[1].torsion_l2 > w[0].torsion_l2)
    }
}

/// `∫|T^c|²` on twistor tori of the given degrees and base resolutions.
pub fn degree_sweep(
    degrees: &[u32],
    resolutions: &[usize],
    curve: &EllipticCurveSpec,
    fiber_basis: &DMatrix<f64>,
) -> Result<SweepTable> {
    let mut rows = Vec::new();
    let mut v2 = 0.0;
    for &res in resolutions {
        for &d in degrees {
            let kind = MapKind::from_degree(d).ok_or_else(|| Error::InvalidSpec(format!("no built-in map of degree {d}")))?;
            let spec = BSVSpec { curve: curve.clone(), fiber_basis: fiber_basis.clone(), map_kind: kind, resolution: res };
            let torus = bsv(&spec)?;
            let h = chern_from_metric(&torus.acs)?;
            let measured = h.torsion_l2()?;
            v2 = spec.fiber_volume();
            let predicted = constants::predicted_torsion_norm(v2, d);
            rows.push(SweepRow { degree: d, resolution: res, torsion_l2: measured, predicted, relative_error: (measured - predicted).abs() / predicted });
        }
    }
    let nrows = rows.len() as f64;
    let (mx, my) = (rows.iter().map(|r| r.degree as f64).sum::<f64>() / nrows, rows.iter().map(|r| r.torsion_l2).sum::<f64>() / nrows);
    let sxx: f64 = rows.iter().map(|r| (r.degree as f64 - mx).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| (r.degree as f64 - mx) * (r.torsion_l2 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { my / mx };
    let intercept = my - slope * mx;
    let ideal = constants::TORSION_NORM_COEFF * v2;
    Ok(SweepTable { fiber_volume: v2, rows, slope, intercept, slope_relative_error: (slope - ideal).abs() / ideal })
}

/// Per-example worst cases of the C¹ bound and the torsion bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundAuditRow {
    pub name: String,
    /// `min (3|T^c| − |∇J|)`.
    pub c1_min_slack: f64,
    pub torsion_max: f64,
    pub nabla_j_max: f64,
    /// `min ((n−2)G − (2k−n)|η|² − (n−k−1)|τ|²)`.
    pub torsion_bound_min_slack: f64,
    /// `min (G − Gaud)`.
    pub gaud_g_min_slack: f64,
}

pub fn bound_audit(examples: &[(&str, &OrthogonalACS)], k: usize) -> Result<Vec<BoundAuditRow>> {
    let mut rows = Vec::new();
    for (name, acs) in examples {
        let h = chern_from_metric(acs)?;
        let audit = identity_audits(&h)?;
        let cs = curvature_scalars(acs.metric(), &h.omega)?;
        let gc = cs.g_curvature();
        let gaud = gauduchon_curvature(&cs);
        let slack = ScalarReport::of(&torsion_bound_slack(&h, &gc, k)?)?;
        let gg = ScalarReport::of(&gc.sub(&gaud)?)?;
        let tmax = h.torsion_sq.values().iter().fold(0.0_f64, |m, v| m.max(v.max(0.0).sqrt()));
        let jmax = h.nabla_j_sq.values().iter().fold(0.0_f64, |m, v| m.max(v.max(0.0).sqrt()));
        rows.push(BoundAuditRow {
            name: name.to_string(),
            c1_min_slack: audit.c1_slack.min,
            torsion_max: tmax,
            nabla_j_max: jmax,
            torsion_bound_min_slack: slack.min,
            gaud_g_min_slack: gg.min,
        });
    }
    Ok(rows)
}

/// C⁰ and C¹ sizes of one member of a sequence of constant Kähler structures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactnessSample {
    pub index: usize,
    pub c0: f64,
    pub c1: f64,
}

/// Seeded sequence of constant Kähler structures `Q J₀ Qᵀ` on a flat torus, with
/// the sup norms of `J` and `∇J`.
pub fn kahler_compactness_probe(chart: &Arc<FlatChart>, count: usize, seed: u64) -> Result<Vec<CompactnessSample>> {
    (0..count)
        .map(|i| {
            let q = crate::constructions::random_orthogonal(chart.dim(), seed.wrapping_add(i as u64));
            let acs = crate::constructions::constant_kahler(chart, &q)?;
            let h = chern_from_metric(&acs)?;
            let n = acs.dim();
            let c0 = (0..acs.j().num_points())
                .map(|p| Frame::new(n, acs.metric().at(p)).map_or(f64::NAN, |f| f.norm_sq(n, acs.j().at(p), &[true, false]).sqrt()))
                .fold(0.0, f64::max);
            let c1 = h.nabla_j_sq.values().iter().fold(0.0_f64, |m, v| m.max(v.max(0.0).sqrt()));
            Ok(CompactnessSample { index: i, c0, c1 })
        })
        .collect()
}

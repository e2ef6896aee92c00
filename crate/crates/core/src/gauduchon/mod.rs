//! k-Gauduchon defects, the Gauduchon curvature scalars and the torsion
//! identities and bounds relating them.

pub mod forms;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants;
use crate::constructions::half_space_modes;
use crate::error::{Error, Result};
use crate::gridcalc::{integrate_dv, ScalarReport, TensorField};
use crate::hermitian::{kahler_form, HermitianPack, OrthogonalACS};
use crate::riemann::CurvatureScalars;
use forms::{bidegree_project, Coframes, FormField};

pub use forms::{reassembly_residual, BidegreeForm};

fn complex_dim(acs: &OrthogonalACS) -> usize {
    acs.dim() / 2
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k < 1 || k + 1 > n {
        return Err(Error::KOutOfRange { k, max: n.saturating_sub(1) });
    }
    Ok(())
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Top-degree coefficient of `i∂∂̄(ω^k) ∧ ω^{n−k−1}` and of `ω^n/n!`.
pub fn k_defect_parts(acs: &OrthogonalACS, k: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let n = complex_dim(acs);
    check_k(n, k)?;
    let frames = Coframes::new(acs)?;
    let omega = FormField::from_two_form(&kahler_form(acs))?;
    let wk = omega.power(k)?;
    let dbar = bidegree_project(&wk.d()?, k, k + 1, &frames)?;
    let ddbar = bidegree_project(&dbar.form.d()?, k + 1, k + 1, &frames)?;
    let mut numer = ddbar.form.scale(Complex64::new(0.0, 1.0));
    if n - k - 1 > 0 {
        numer = numer.wedge(&omega.power(n - k - 1)?)?;
    }
    let vol: Vec<Complex64> = omega.power(n)?.top().into_iter().map(|v| v / factorial(n)).collect();
    Ok((numer.top(), vol))
}

/// `i∂∂̄(ω^k) ∧ ω^{n−k−1}` divided by the volume form `ω^n/n!`.
pub fn k_defect(acs: &OrthogonalACS, k: usize) -> Result<TensorField> {
    let (num, vol) = k_defect_parts(acs, k)?;
    let values: Vec<f64> = num.iter().zip(&vol).map(|(a, b)| (a / b).re).collect();
    TensorField::new(acs.j().chart().clone(), vec![], values)
}

/// `Gaud = (2n−2)/(2n−1) S − ⟨W(ω), ω⟩`.
pub fn gauduchon_curvature(cs: &CurvatureScalars) -> TensorField {
    let c = constants::scalar_coeff(cs.scalar.dim() / 2);
    cs.scalar.map_points(vec![], |p, s, o| {
        o[0] = c * s[0] - constants::GAUD_WEYL_COEFF * cs.weyl_omega.at(p)[0];
    })
}

/// Pointwise report plus the signed and L2 integrals of a residual field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub pointwise: ScalarReport,
    /// `∫ r dV`.
    pub integrated: f64,
    /// `(∫ r² dV)^{1/2}`.
    pub l2: f64,
    /// Largest pointwise magnitude of the terms being compared, for scale.
    pub scale: f64,
}

impl ResidualReport {
    pub fn of(r: &TensorField, g: &TensorField, scale: f64) -> Result<Self> {
        let sq = r.map_points(vec![], |_, v, o| o[0] = v[0] * v[0]);
        Ok(Self {
            pointwise: ScalarReport::of(r)?,
            integrated: integrate_dv(r, g)?,
            l2: integrate_dv(&sq, g)?.max(0.0).sqrt(),
            scale,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.pointwise.max_abs()
    }
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `|θ|² + 2δθ − (2n−2)/(2n−1) S + 2⟨W(ω),ω⟩`.
pub fn eq1_residual_field(h: &HermitianPack, cs: &CurvatureScalars) -> Result<(TensorField, f64)> {
    let n = h.dim() / 2;
    let c = constants::scalar_coeff(n);
    let wp = &cs.weyl_omega;
    let mut scale = 0.0_f64;
    let r = h.theta_sq.map_points(vec![], |p, t, o| {
        let lhs = t[0] + 2.0 * h.delta_theta.at(p)[0];
        let rhs = c * cs.scalar.at(p)[0] - constants::EQ1_WEYL_COEFF * wp.at(p)[0];
        o[0] = lhs - rhs;
    });
    for p in 0..r.num_points() {
        scale = scale.max(h.theta_sq.at(p)[0].abs()).max(h.delta_theta.at(p)[0].abs()).max(cs.scalar.at(p)[0].abs());
    }
    Ok((r, scale))
}

pub fn eq1_residual(h: &HermitianPack, cs: &CurvatureScalars) -> Result<ResidualReport> {
    let (r, scale) = eq1_residual_field(h, cs)?;
    ResidualReport::of(&r, &h.g, scale)
}

/// Both sides of `(n−2)Gaud = (2k−n)|η|² + (n−k−1)|τ|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KgIdentityReport {
    pub k: usize,
    /// `(n−2)Gaud − (2k−n)|η|² − (n−k−1)|τ|²`.
    pub residual: ResidualReport,
    pub lhs_max: f64,
    pub rhs_max: f64,
    pub lhs_integral: f64,
    pub rhs_integral: f64,
}

pub fn kg_identity_residual(h: &HermitianPack, gaud: &TensorField, k: usize) -> Result<KgIdentityReport> {
    let n = h.dim() / 2;
    check_k(n, k)?;
    let (a, b, c) = constants::kg_coeffs(n, k);
    let lhs = gaud.map_points(vec![], |_, v, o| o[0] = a * v[0]);
    let rhs = h.eta_sq.map_points(vec![], |p, e, o| o[0] = b * e[0] + c * h.tau_sq.at(p)[0]);
    let r = lhs.sub(&rhs)?;
    let (lm, rm) = (max_abs(lhs.values()), max_abs(rhs.values()));
    Ok(KgIdentityReport {
        k,
        residual: ResidualReport::of(&r, &h.g, lm.max(rm))?,
        lhs_max: lm,
        rhs_max: rm,
        lhs_integral: integrate_dv(&lhs, &h.g)?,
        rhs_integral: integrate_dv(&rhs, &h.g)?,
    })
}

/// Slack `(n−2)G − (2k−n)|η|² − (n−k−1)|τ|²` of the torsion bound.
pub fn torsion_bound_slack(h: &HermitianPack, g_curv: &TensorField, k: usize) -> Result<TensorField> {
    let n = h.dim() / 2;
    check_k(n, k)?;
    let (a, b, c) = constants::kg_coeffs(n, k);
    Ok(g_curv.map_points(vec![], |p, gv, o| {
        o[0] = a * gv[0] - b * h.eta_sq.at(p)[0] - c * h.tau_sq.at(p)[0];
    }))
}

pub fn torsion_bound_report(h: &HermitianPack, cs: &CurvatureScalars, k: usize) -> Result<ScalarReport> {
    ScalarReport::of(&torsion_bound_slack(h, &cs.g_curvature(), k)?)
}

/// Slack `G − Gaud`.
pub fn gaud_vs_g(cs: &CurvatureScalars) -> Result<ScalarReport> {
    ScalarReport::of(&cs.g_curvature().sub(&gauduchon_curvature(cs))?)
}

/// Residual fields `2|η|² − |T|²` and `|T|² − 2 Gaud`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiKReport {
    pub eta_vs_torsion: ScalarReport,
    pub torsion_vs_gaud: ScalarReport,
}

pub fn multi_k_residual(h: &HermitianPack, gaud: &TensorField) -> Result<MultiKReport> {
    let a = h.eta_sq.map_points(vec![], |p, e, o| o[0] = 2.0 * e[0] - h.torsion_sq.at(p)[0]);
    let b = h.torsion_sq.map_points(vec![], |p, t, o| o[0] = t[0] - 2.0 * gaud.at(p)[0]);
    Ok(MultiKReport { eta_vs_torsion: ScalarReport::of(&a)?, torsion_vs_gaud: ScalarReport::of(&b)? })
}

/// Settings for the conformal Gauduchon factor search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorConfig {
    /// Highest Fourier frequency of `u`; defaults to `resolution / 4`.
    pub max_freq: Option<usize>,
    pub max_iters: usize,
    /// Finite-difference step for directional derivatives.
    pub fd_step: f64,
    /// Stop once `F(u) ≤ target_ratio · F(0)`.
    pub target_ratio: f64,
}

impl Default for FactorConfig {
    fn default() -> Self {
        Self { max_freq: None, max_iters: 30, fd_step: 1e-6, target_ratio: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct FactorSolve {
    /// Conformal factor with the metric `e^{2u} g`.
    pub u: TensorField,
    pub coeffs: Vec<f64>,
    pub f0: f64,
    pub f_final: f64,
    /// `F` after every accepted iterate, starting with `F(0)`.
    pub history: Vec<f64>,
    pub converged: bool,
}

impl FactorSolve {
    pub fn ratio(&self) -> f64 {
        if self.f0 == 0.0 {
            0.0
        } else {
            self.f_final / self.f0
        }
    }
}

struct DefectProblem<'a> {
    acs: &'a OrthogonalACS,
    basis: Vec<Vec<f64>>,
}

impl DefectProblem<'_> {
    fn u_values(&self, c: &[f64]) -> Vec<f64> {
        let np = self.acs.j().num_points();
        let mut u = vec![0.0; np];
        for (ci, b) in c.iter().zip(&self.basis) {
            if *ci != 0.0 {
                for (x, y) in u.iter_mut().zip(b) {
                    *x += ci * y;
                }
            }
        }
        u
    }

    /// Weighted defect samples `r_p = D_p (w_p)^{1/2}` with `Σ r² ≈ ∫ D² dV`.
    fn residual(&self, c: &[f64]) -> Result<Vec<f64>> {
        let u = self.u_values(c);
        let chart = self.acs.j().chart().clone();
        let uf = TensorField::new(chart, vec![], u)?;
        let g = crate::constructions::conformal_metric(self.acs.metric(), &uf)?;
        let scaled = OrthogonalACS::with_tolerance(self.acs.j().clone(), g.clone(), 1e-8)?;
        let n = complex_dim(self.acs);
        let d = k_defect(&scaled, n - 1)?;
        let dim = g.dim();
        let np = d.num_points() as f64;
        Ok((0..d.num_points())
            .map(|p| {
                let det = crate::linalg::invert(g.at(p), dim).map_or(0.0, |(_, v)| v).abs();
                d.at(p)[0] * (det.sqrt() / np).sqrt()
            })
            .collect())
    }
}

fn sq_norm(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Find `u` with `e^{2u} g` standard Gauduchon by damped Gauss–Newton on
/// `F(u) = ∫ defect_{n−1}² dV` over a truncated Fourier basis of mean-zero `u`.
pub fn conformal_gauduchon_factor(acs: &OrthogonalACS, config: &FactorConfig) -> Result<FactorSolve> {
    let chart = acs.j().chart().clone();
    let active = chart.active_axes().to_vec();
    let max_freq = config.max_freq.unwrap_or(chart.resolution() / 4).max(1) as i32;
    let mut basis = Vec::new();
    for k in half_space_modes(active.len(), max_freq) {
        for trig in 0..2 {
            let vals: Vec<f64> = (0..chart.num_points())
                .map(|p| {
                    let x = chart.point(p);
                    let ph = 2.0 * std::f64::consts::PI * active.iter().zip(&k).map(|(&a, &ki)| ki as f64 * x[a]).sum::<f64>();
                    if trig == 0 {
                        ph.cos()
                    } else {
                        ph.sin()
                    }
                })
                .collect();
            basis.push(vals);
        }
    }
    let problem = DefectProblem { acs, basis };
    let m = problem.basis.len();
    let mut c = vec![0.0; m];
    let mut r = problem.residual(&c)?;
    let f0 = sq_norm(&r);
    let mut history = vec![f0];
    let mut f = f0;
    let mut lambda = 1e-3;
    let target = config.target_ratio * f0;
    let mut iters = 0;
    while f > target && iters < config.max_iters && f0 > 0.0 {
        iters += 1;
        let cols: Vec<Result<Vec<f64>>> = {
            use rayon::prelude::*;
            (0..m)
                .into_par_iter()
                .map(|i| {
                    let mut cp = c.clone();
                    cp[i] += config.fd_step;
                    let rp = problem.residual(&cp)?;
                    Ok(rp.iter().zip(&r).map(|(a, b)| (a - b) / config.fd_step).collect())
                })
                .collect()
        };
        let mut jac = DMatrix::zeros(r.len(), m);
        for (i, col) in cols.into_iter().enumerate() {
            for (row, v) in col?.into_iter().enumerate() {
                jac[(row, i)] = v;
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * DVector::from_column_slice(&r);
        let mut accepted = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for i in 0..m {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = c.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
            let rt = match problem.residual(&trial) {
                Ok(v) => v,
                Err(_) => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let ft = sq_norm(&rt);
            if ft < f {
                c = trial;
                r = rt;
                f = ft;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        history.push(f);
        if !accepted {
            break;
        }
    }
    let u = TensorField::new(chart, vec![], problem.u_values(&c))?;
    Ok(FactorSolve { u, coeffs: c, f0, f_final: f, history, converged: f <= target })
}

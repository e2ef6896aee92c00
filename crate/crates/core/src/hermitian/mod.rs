//! Orthogonal almost complex structures, the Nijenhuis tensor, the Chern
//! connection and its torsion invariants.

pub mod kernels;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants;
use crate::error::{Error, Result};
use crate::gridcalc::{for_each_point_blocked, inverse_metric, ScalarReport, Slot, TensorField};
use crate::riemann::kernels::{i2, i3};
use crate::riemann::{christoffel, first_derivatives, slices_at, CurvaturePack};
use kernels::{PivotOrder, PointInputs};

/// Default tolerance for `J² = −Id` and `g`-orthogonality.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// A `g`-orthogonal almost complex structure on a grid.
#[derive(Debug, Clone)]
pub struct OrthogonalACS {
    j: TensorField,
    metric: TensorField,
    compat_residual: f64,
    square_residual: f64,
}

impl OrthogonalACS {
    pub fn new(j: TensorField, metric: TensorField) -> Result<Self> {
        Self::with_tolerance(j, metric, STRUCTURE_TOL)
    }

    pub fn with_tolerance(j: TensorField, metric: TensorField, tol: f64) -> Result<Self> {
        let acs = Self::unchecked(j, metric)?;
        if acs.square_residual > tol {
            return Err(Error::InvalidStructure { which: "J^2 = -Id", residual: acs.square_residual, tolerance: tol });
        }
        if acs.compat_residual > tol {
            return Err(Error::InvalidStructure { which: "g-orthogonality", residual: acs.compat_residual, tolerance: tol });
        }
        Ok(acs)
    }

    /// Build and measure residuals without enforcing them.
    pub fn unchecked(j: TensorField, metric: TensorField) -> Result<Self> {
        if j.variance() != [Slot::Upper, Slot::Lower] {
            return Err(Error::Variance("J must be (upper, lower)".into()));
        }
        if metric.variance() != [Slot::Lower, Slot::Lower] {
            return Err(Error::Variance("metric must be (lower, lower)".into()));
        }
        if j.chart() != metric.chart() && **j.chart() != **metric.chart() {
            return Err(Error::Shape("J and g live on different charts".into()));
        }
        j.check_finite("J")?;
        let (compat_residual, square_residual) = structure_residuals(&j, &metric);
        Ok(Self { j, metric, compat_residual, square_residual })
    }

    pub fn j(&self) -> &TensorField {
        &self.j
    }

    pub fn metric(&self) -> &TensorField {
        &self.metric
    }

    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    /// `max |g_kl J^k_i J^l_j − g_ij|`.
    pub fn compat_residual(&self) -> f64 {
        self.compat_residual
    }

    /// `max |J^i_k J^k_j + δ^i_j|`.
    pub fn square_residual(&self) -> f64 {
        self.square_residual
    }

    /// Same `J` paired with another metric.
    pub fn with_metric(&self, metric: TensorField) -> Result<Self> {
        Self::new(self.j.clone(), metric)
    }
}

fn structure_residuals(j: &TensorField, g: &TensorField) -> (f64, f64) {
    let n = j.dim();
    let mut compat = 0.0_f64;
    let mut square = 0.0_f64;
    for p in 0..j.num_points() {
        let jm = j.at(p);
        let gm = g.at(p);
        let jj = crate::linalg::matmul(jm, jm, n);
        let jtg = crate::linalg::matmul(&crate::linalg::transpose(jm, n), gm, n);
        let jtgj = crate::linalg::matmul(&jtg, jm, n);
        for c in 0..n * n {
            let delta = (c / n == c % n) as u8 as f64;
            square = square.max((jj[c] + delta).abs());
            compat = compat.max((jtgj[c] - gm[c]).abs());
        }
    }
    (compat, square)
}

/// Nijenhuis tensor `N^k_ij` of `J` (layout `[k][i][j]`).
pub fn nijenhuis(acs: &OrthogonalACS) -> Result<TensorField> {
    nijenhuis_of(acs.j())
}

/// Nijenhuis tensor of any `(1,1)` field.
pub fn nijenhuis_of(j: &TensorField) -> Result<TensorField> {
    let n = j.dim();
    let dj = first_derivatives(j)?;
    Ok(j.map_points(vec![Slot::Upper, Slot::Lower, Slot::Lower], |p, jm, o| {
        o.copy_from_slice(&kernels::nijenhuis_at(n, jm, &slices_at(&dj, p)));
    }))
}

/// `∫ |N|² dV` with the norm taken through `g`.
pub fn nijenhuis_energy_of(j: &TensorField, g: &TensorField) -> Result<f64> {
    let n = j.dim();
    let nij = nijenhuis_of(j)?;
    let sq = nij.map_points(vec![], |p, v, o| {
        let f = kernels::Frame::new(n, g.at(p)).expect("metric is positive definite");
        o[0] = f.norm_sq(n, v, &[true, false, false]);
    });
    crate::gridcalc::integrate(&sq)
}

/// Kähler form `ω_ij = g_kj J^k_i`.
pub fn kahler_form(acs: &OrthogonalACS) -> TensorField {
    let n = acs.dim();
    acs.j.map_points(vec![Slot::Lower, Slot::Lower], |p, jm, o| {
        o.copy_from_slice(&kernels::kahler_form_at(n, acs.metric.at(p), jm));
    })
}

/// Exterior derivative of a 2-form field, as an antisymmetric rank-3 field.
pub fn d_omega(omega: &TensorField) -> Result<TensorField> {
    if omega.variance() != [Slot::Lower, Slot::Lower] {
        return Err(Error::Variance("2-form must be (lower, lower)".into()));
    }
    let n = omega.dim();
    let d = first_derivatives(omega)?;
    Ok(omega.map_points(vec![Slot::Lower; 3], |p, _, o| {
        o.copy_from_slice(&kernels::d_two_form_at(n, &slices_at(&d, p)));
    }))
}

/// Exterior derivative of an antisymmetric rank-3 field:
/// `(dα)_ijkl = ∂_i α_jkl − ∂_j α_ikl + ∂_k α_ijl − ∂_l α_ijk`.
pub fn d_three_form(alpha: &TensorField) -> Result<TensorField> {
    let n = alpha.dim();
    let d = first_derivatives(alpha)?;
    Ok(alpha.map_points(vec![Slot::Lower; 4], |p, _, o| {
        let s = slices_at(&d, p);
        let v = |a: usize, x: usize, y: usize, z: usize| s[a].map_or(0.0, |f| f[i3(n, x, y, z)]);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        o[((i * n + j) * n + k) * n + l] = v(i, j, k, l) - v(j, i, k, l) + v(k, i, j, l) - v(l, i, j, k);
                    }
                }
            }
        }
    }))
}

/// Unitary frame of `T^{1,0}` at every point, vector-major per point.
pub fn unitary_frame(acs: &OrthogonalACS, order: PivotOrder) -> Result<Vec<Vec<Complex64>>> {
    let n = acs.dim();
    let mut out = Vec::with_capacity(acs.j.num_points());
    for p in 0..acs.j.num_points() {
        let f = kernels::unitary_frame_at(n, acs.metric.at(p), acs.j.at(p), order)
            .ok_or_else(|| Error::RankDeficient { point: acs.j.chart().grid_index(p) })?;
        out.push(f);
    }
    Ok(out)
}

/// Chern connection data and torsion invariants of an orthogonal structure.
#[derive(Debug, Clone)]
pub struct HermitianPack {
    pub j: TensorField,
    pub g: TensorField,
    pub omega: TensorField,
    pub d_omega: TensorField,
    pub chern_gamma: TensorField,
    pub torsion: TensorField,
    pub tau: TensorField,
    /// Real and imaginary parts of the complex 1-form `η`.
    pub eta_re: TensorField,
    pub eta_im: TensorField,
    pub delta_omega: TensorField,
    pub theta: TensorField,
    pub delta_theta: TensorField,
    pub torsion_sq: TensorField,
    pub tau_sq: TensorField,
    pub eta_sq: TensorField,
    pub theta_sq: TensorField,
    pub nabla_j_sq: TensorField,
    /// Largest `|η − η'|` between the two Gram–Schmidt pivot orders.
    pub eta_frame_gap: f64,
    /// Largest component of `∇^c J` and of `∇^c g`.
    pub chern_j_residual: f64,
    pub chern_g_residual: f64,
}

/// Chern pack using the Levi-Civita symbols from a curvature pack.
pub fn chern(acs: &OrthogonalACS, pack: &CurvaturePack) -> Result<HermitianPack> {
    chern_with_gamma(acs, &pack.gamma)
}

/// Chern pack computing the Levi-Civita symbols directly from the metric.
pub fn chern_from_metric(acs: &OrthogonalACS) -> Result<HermitianPack> {
    let gamma = christoffel(acs.metric())?;
    chern_with_gamma(acs, &gamma)
}

pub fn chern_with_gamma(acs: &OrthogonalACS, gamma: &TensorField) -> Result<HermitianPack> {
    let n = acs.dim();
    let g = acs.metric();
    let j = acs.j();
    let chart = j.chart().clone();
    let ginv = inverse_metric(g)?;
    let dg = first_derivatives(g)?;
    let dj = first_derivatives(j)?;
    let np = j.num_points();
    let (n2, n3) = (n * n, n * n * n);
    let mut omega = Vec::with_capacity(np * n2);
    let mut dw = Vec::with_capacity(np * n3);
    let mut cg = Vec::with_capacity(np * n3);
    let mut tor = Vec::with_capacity(np * n3);
    let mut tau = Vec::with_capacity(np * n3);
    let (mut er, mut ei, mut dom, mut th) =
        (Vec::with_capacity(np * n), Vec::with_capacity(np * n), Vec::with_capacity(np * n), Vec::with_capacity(np * n));
    let (mut t2, mut tau2, mut e2, mut th2, mut nj2) =
        (Vec::with_capacity(np), Vec::with_capacity(np), Vec::with_capacity(np), Vec::with_capacity(np), Vec::with_capacity(np));
    let (mut gap, mut cjr, mut cgr) = (0.0_f64, 0.0_f64, 0.0_f64);
    for_each_point_blocked(
        np,
        |p| {
            kernels::hermitian_at(&PointInputs {
                n,
                g: g.at(p),
                ginv: ginv.at(p),
                dg: slices_at(&dg, p),
                j: j.at(p),
                dj: slices_at(&dj, p),
                gamma: gamma.at(p),
            })
        },
        |p, h| {
            let h = h.ok_or_else(|| Error::RankDeficient { point: chart.grid_index(p) })?;
            omega.extend(h.omega);
            dw.extend(h.d_omega);
            cg.extend(h.chern_gamma);
            tor.extend(h.torsion);
            tau.extend(h.tau);
            er.extend(h.eta.iter().map(|z| z.re));
            ei.extend(h.eta.iter().map(|z| z.im));
            dom.extend(h.delta_omega);
            th.extend(h.theta);
            t2.push(h.torsion_sq);
            tau2.push(h.tau_sq);
            e2.push(h.eta_sq);
            th2.push(h.theta_sq);
            nj2.push(h.nabla_j_sq);
            gap = gap.max(h.eta_frame_gap);
            cjr = cjr.max(h.chern_j_residual);
            cgr = cgr.max(h.chern_g_residual);
            Ok(())
        },
    )?;
    let l = Slot::Lower;
    let mk = |var: Vec<Slot>, v: Vec<f64>| TensorField::new(chart.clone(), var, v);
    let theta = mk(vec![l], th)?;
    // δθ = −g^{ij}(∂_i θ_j − Γ^m_ij θ_m)
    let dth = first_derivatives(&theta)?;
    let delta_theta = theta.map_points(vec![], |p, t, o| {
        let d = slices_at(&dth, p);
        let gi = ginv.at(p);
        let gm = gamma.at(p);
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                let gab = gi[i2(n, a, b)];
                if gab == 0.0 {
                    continue;
                }
                let mut v = d[a].map_or(0.0, |x| x[b]);
                for m in 0..n {
                    v -= gm[i3(n, m, a, b)] * t[m];
                }
                s += gab * v;
            }
        }
        o[0] = -s;
    });
    Ok(HermitianPack {
        j: j.clone().without_jet(),
        g: g.clone().without_jet(),
        omega: mk(vec![l, l], omega)?,
        d_omega: mk(vec![l; 3], dw)?,
        chern_gamma: mk(vec![Slot::Upper, l, l], cg)?,
        torsion: mk(vec![Slot::Upper, l, l], tor)?,
        tau: mk(vec![l; 3], tau)?,
        eta_re: mk(vec![l], er)?,
        eta_im: mk(vec![l], ei)?,
        delta_omega: mk(vec![l], dom)?,
        theta,
        delta_theta,
        torsion_sq: mk(vec![], t2)?,
        tau_sq: mk(vec![], tau2)?,
        eta_sq: mk(vec![], e2)?,
        theta_sq: mk(vec![], th2)?,
        nabla_j_sq: mk(vec![], nj2)?,
        eta_frame_gap: gap,
        chern_j_residual: cjr,
        chern_g_residual: cgr,
    })
}

impl HermitianPack {
    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    /// `max_i |η_i|` over the grid (complex modulus).
    pub fn eta_max(&self) -> f64 {
        self.eta_re.values().iter().zip(self.eta_im.values()).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max)
    }

    /// `∫ |T^c|² dV`.
    pub fn torsion_l2(&self) -> Result<f64> {
        crate::gridcalc::integrate(&self.torsion_sq)
    }
}

/// Residual summaries of the identities tying `dω`, `τ`, `∇J`, `θ` and `η` together.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityAudit {
    /// `max |−½ dω(JX,Y,Z) − ½(τ_XYZ − τ_YZX + τ_ZXY)|` over coordinate triples,
    /// relative to `max(max|τ|, 1)`.
    pub dw_tau_residual: f64,
    /// The same with `τ_{JX Y Z} − τ_{Y Z JX} + τ_{Z JX Y}` on the right, as quoted.
    pub dw_tau_quoted_residual: f64,
    /// Pointwise `3|T^c| − |∇J|`.
    pub c1_slack: ScalarReport,
    /// `max (|∇J| − 3|T^c|)_+`.
    pub c1_excess: f64,
    /// `max |θ − c (η + η̄)|` for the quoted `c`, relative to `max(max|θ|, 1)`.
    pub theta_eta_quoted_residual: f64,
    /// Least-squares `c` in `θ ≈ c (η + η̄)`; `None` when `η` vanishes.
    pub theta_eta_calibrated: Option<f64>,
    pub theta_eta_calibrated_residual: f64,
}

pub fn identity_audits(h: &HermitianPack) -> Result<IdentityAudit> {
    let n = h.dim();
    let tau_scale = h.tau.max_abs().max(1.0);
    let mut dw_res = 0.0_f64;
    let mut dw_quoted = 0.0_f64;
    for p in 0..h.j.num_points() {
        let jm = h.j.at(p);
        let dw = h.d_omega.at(p);
        let t = h.tau.at(p);
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let lhs: f64 = -0.5 * (0..n).map(|m| jm[i2(n, m, x)] * dw[i3(n, m, y, z)]).sum::<f64>();
                    let alg = 0.5 * (t[i3(n, x, y, z)] - t[i3(n, y, z, x)] + t[i3(n, z, x, y)]);
                    let rhs_plain = (0..n)
                        .map(|m| {
                            0.5 * jm[i2(n, m, x)] * (t[i3(n, m, y, z)] - t[i3(n, y, z, m)] + t[i3(n, z, m, y)])
                        })
                        .sum::<f64>();
                    dw_res = dw_res.max((lhs - alg).abs());
                    dw_quoted = dw_quoted.max((lhs - rhs_plain).abs());
                }
            }
        }
    }
    let slack = h.torsion_sq.map_points(vec![], |p, t2, o| {
        o[0] = constants::C1_BOUND_FACTOR * t2[0].max(0.0).sqrt() - h.nabla_j_sq.at(p)[0].max(0.0).sqrt();
    });
    let c1_slack = ScalarReport::of(&slack)?;
    let c1_excess = (-c1_slack.min).max(0.0);

    let theta = h.theta.values();
    let two_re: Vec<f64> = h.eta_re.values().iter().map(|v| 2.0 * v).collect();
    let theta_scale = h.theta.max_abs().max(1.0);
    let resid = |c: f64| theta.iter().zip(&two_re).map(|(t, e)| (t - c * e).abs()).fold(0.0, f64::max) / theta_scale;
    let den: f64 = two_re.iter().map(|e| e * e).sum();
    let num: f64 = theta.iter().zip(&two_re).map(|(t, e)| t * e).sum();
    let calibrated = (den > 1e-300).then(|| num / den);
    Ok(IdentityAudit {
        dw_tau_residual: dw_res / tau_scale,
        dw_tau_quoted_residual: dw_quoted / tau_scale,
        c1_slack,
        c1_excess,
        theta_eta_quoted_residual: resid(constants::THETA_ETA_QUOTED),
        theta_eta_calibrated: calibrated,
        theta_eta_calibrated_residual: calibrated.map_or(resid(0.0), resid),
    })
}

//! Pointwise Hermitian kernels. `J` is stored row-major as `J[a][b] = J^a_b`
//! so that `J e_b = Σ_a J^a_b e_a`.

use num_complex::Complex64;

use crate::linalg;
use crate::riemann::kernels::{i2, i3};

/// Sign `s` in `(Jα)_k = s α_m J^m_k` for 1-forms, used in `θ = J δω`.
/// Fixed by requiring the Lie-form identity on conformally Kähler metrics,
/// where it forces `θ = (2n − 2) du` for `g = e^{2u} g_0`.
pub const ONE_FORM_J_SIGN: f64 = -1.0;

/// `N^k_ij = J^k_l(∂_i J^l_j − ∂_j J^l_i) − (J^m_i ∂_m J^k_j − J^m_j ∂_m J^k_i)`,
/// the coordinate form of `−J²[X,Y] + J[X,JY] + J[JX,Y] − [JX,JY]`.
pub fn nijenhuis_at(n: usize, j: &[f64], dj: &[Option<&[f64]>]) -> Vec<f64> {
    let d = |a: usize, p: usize, q: usize| dj[a].map_or(0.0, |x| x[i2(n, p, q)]);
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for jj in 0..n {
                let mut v = 0.0;
                for l in 0..n {
                    v += j[i2(n, k, l)] * (d(i, l, jj) - d(jj, l, i));
                }
                for m in 0..n {
                    v -= j[i2(n, m, i)] * d(m, k, jj) - j[i2(n, m, jj)] * d(m, k, i);
                }
                out[i3(n, k, i, jj)] = v;
            }
        }
    }
    out
}

/// `ω_ij = g_kj J^k_i`.
pub fn kahler_form_at(n: usize, g: &[f64], j: &[f64]) -> Vec<f64> {
    linalg::matmul(&linalg::transpose(j, n), g, n)
}

/// Antisymmetrized derivative `(dα)_ijk = ∂_i α_jk + ∂_j α_ki + ∂_k α_ij` of a 2-form.
pub fn d_two_form_at(n: usize, dalpha: &[Option<&[f64]>]) -> Vec<f64> {
    let d = |a: usize, p: usize, q: usize| dalpha[a].map_or(0.0, |x| x[i2(n, p, q)]);
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[i3(n, i, j, k)] = d(i, j, k) + d(j, k, i) + d(k, i, j);
            }
        }
    }
    out
}

/// Orthonormal frame transforms: `e` with `e^T g e = I` and its inverse.
pub struct Frame {
    pub e: Vec<f64>,
    pub e_inv: Vec<f64>,
}

impl Frame {
    pub fn new(n: usize, g: &[f64]) -> Option<Self> {
        let e = crate::riemann::kernels::orthonormal_frame(n, g)?;
        let (e_inv, _) = linalg::invert(&e, n)?;
        Some(Self { e, e_inv })
    }

    /// Squared norm of a tensor with the given slot variances (`true` = upper),
    /// computed from its orthonormal-frame components.
    pub fn norm_sq(&self, n: usize, comps: &[f64], upper: &[bool]) -> f64 {
        self.components(n, comps, upper).iter().map(|v| v * v).sum()
    }

    /// Orthonormal-frame components of a tensor with the given slot variances.
    pub fn components(&self, n: usize, comps: &[f64], upper: &[bool]) -> Vec<f64> {
        let r = upper.len();
        let mut w = comps.to_vec();
        for (slot, &up) in upper.iter().enumerate() {
            let stride = n.pow((r - 1 - slot) as u32);
            let mut next = vec![0.0; w.len()];
            for (c, o) in next.iter_mut().enumerate() {
                let a = (c / stride) % n;
                let base = c - a * stride;
                let mut v = 0.0;
                for i in 0..n {
                    let t = if up { self.e_inv[i2(n, a, i)] } else { self.e[i2(n, i, a)] };
                    v += t * w[base + i * stride];
                }
                *o = v;
            }
            w = next;
        }
        w
    }
}

/// Pivot order for the unitary-frame Gram–Schmidt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotOrder {
    Ascending,
    Descending,
}

/// Hermitian product `h(u, v) = u^a g_ab conj(v^b)`.
pub fn hermitian_product(n: usize, g: &[f64], u: &[Complex64], v: &[Complex64]) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            s += u[a] * g[i2(n, a, b)] * v[b].conj();
        }
    }
    s
}

/// Unitary frame of the `+i` eigenspace of `J`: `n/2` vectors, returned
/// vector-major (`frame[j * n + a] = e_j^a`). Candidates `½(e_c − i J e_c)` are
/// orthogonalized with largest-residual pivoting; ties go to the first
/// candidate in `order`.
pub fn unitary_frame_at(n: usize, g: &[f64], j: &[f64], order: PivotOrder) -> Option<Vec<Complex64>> {
    let half = n / 2;
    let mut cands: Vec<Vec<Complex64>> = (0..n)
        .map(|c| (0..n).map(|a| Complex64::new(0.5 * (a == c) as u8 as f64, -0.5 * j[i2(n, a, c)])).collect())
        .collect();
    if order == PivotOrder::Descending {
        cands.reverse();
    }
    let mut frame: Vec<Vec<Complex64>> = Vec::with_capacity(half);
    for _ in 0..half {
        let mut best: Option<(usize, Vec<Complex64>, f64)> = None;
        for (c, v) in cands.iter().enumerate() {
            let mut r = v.clone();
            for e in &frame {
                let pr = hermitian_product(n, g, &r, e);
                for a in 0..n {
                    r[a] -= pr * e[a];
                }
            }
            let nn = hermitian_product(n, g, &r, &r).re;
            if best.as_ref().is_none_or(|b| nn > b.2) {
                best = Some((c, r, nn));
            }
        }
        let (c, r, nn) = best?;
        if !(nn > 1e-12) {
            return None;
        }
        let s = 1.0 / nn.sqrt();
        frame.push(r.into_iter().map(|x| x * s).collect());
        cands.remove(c);
    }
    Some(frame.concat())
}

/// `η_i = Σ_j g(T(∂_i, e_j), conj e_j)` for a unitary frame `e_j`.
pub fn eta_from_frame(n: usize, g: &[f64], torsion: &[f64], frame: &[Complex64]) -> Vec<Complex64> {
    let half = frame.len() / n;
    let mut eta = vec![Complex64::new(0.0, 0.0); n];
    for (i, out) in eta.iter_mut().enumerate() {
        for jf in 0..half {
            let e = &frame[jf * n..(jf + 1) * n];
            // v^k = T^k_im e^m
            let v: Vec<Complex64> =
                (0..n).map(|k| (0..n).map(|m| e[m] * torsion[i3(n, k, i, m)]).sum::<Complex64>()).collect();
            *out += hermitian_product(n, g, &v, e);
        }
    }
    eta
}

/// Frame-free `η_i = tr(T_i P)` with `(T_i)^k_m = T^k_im` and `P = ½(I − iJ)`.
pub fn eta_by_projector(n: usize, torsion: &[f64], j: &[f64]) -> Vec<Complex64> {
    (0..n)
        .map(|i| {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..n {
                for m in 0..n {
                    let p = Complex64::new(0.5 * (m == k) as u8 as f64, -0.5 * j[i2(n, m, k)]);
                    s += torsion[i3(n, k, i, m)] * p;
                }
            }
            s
        })
        .collect()
}

/// Covariant derivative of a (1,1) tensor with connection coefficients `c`:
/// `(∇_i A)^a_b = ∂_i A^a_b + c^a_ic A^c_b − c^c_ib A^a_c`, layout `[i][a][b]`.
pub fn nabla_endomorphism(n: usize, c: &[f64], a: &[f64], da: &[Option<&[f64]>]) -> Vec<f64> {
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for p in 0..n {
            for q in 0..n {
                let mut v = da[i].map_or(0.0, |x| x[i2(n, p, q)]);
                for m in 0..n {
                    v += c[i3(n, p, i, m)] * a[i2(n, m, q)] - c[i3(n, m, i, q)] * a[i2(n, p, m)];
                }
                out[i3(n, i, p, q)] = v;
            }
        }
    }
    out
}

/// `(∇_i g)_ab = ∂_i g_ab − c^m_ia g_mb − c^m_ib g_am`, layout `[i][a][b]`.
pub fn nabla_metric(n: usize, c: &[f64], g: &[f64], dg: &[Option<&[f64]>]) -> Vec<f64> {
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut v = dg[i].map_or(0.0, |x| x[i2(n, a, b)]);
                for m in 0..n {
                    v -= c[i3(n, m, i, a)] * g[i2(n, m, b)] + c[i3(n, m, i, b)] * g[i2(n, a, m)];
                }
                out[i3(n, i, a, b)] = v;
            }
        }
    }
    out
}

/// Everything the Chern construction produces at one point.
#[derive(Debug, Clone)]
pub struct PointHermitian {
    pub omega: Vec<f64>,
    pub d_omega: Vec<f64>,
    pub chern_gamma: Vec<f64>,
    pub torsion: Vec<f64>,
    pub tau: Vec<f64>,
    pub eta: Vec<Complex64>,
    /// `max_i |η_i − η'_i|` between the two pivot orders.
    pub eta_frame_gap: f64,
    pub delta_omega: Vec<f64>,
    pub theta: Vec<f64>,
    pub torsion_sq: f64,
    pub tau_sq: f64,
    pub eta_sq: f64,
    pub theta_sq: f64,
    pub nabla_j_sq: f64,
    /// `max |∇^c J|` and `max |∇^c g|` component residuals.
    pub chern_j_residual: f64,
    pub chern_g_residual: f64,
}

/// Inputs at one point: metric, inverse, first derivatives of `g` and `J`
/// (indexed by axis) and the Levi-Civita symbols.
pub struct PointInputs<'a> {
    pub n: usize,
    pub g: &'a [f64],
    pub ginv: &'a [f64],
    pub dg: Vec<Option<&'a [f64]>>,
    pub j: &'a [f64],
    pub dj: Vec<Option<&'a [f64]>>,
    pub gamma: &'a [f64],
}

pub fn hermitian_at(inp: &PointInputs) -> Option<PointHermitian> {
    let n = inp.n;
    let (g, ginv, j, gamma) = (inp.g, inp.ginv, inp.j, inp.gamma);
    let omega = kahler_form_at(n, g, j);
    // ∂_a ω_ij = ∂_a J^k_i g_kj + J^k_i ∂_a g_kj
    let domega_parts: Vec<Option<Vec<f64>>> = (0..n)
        .map(|a| {
            if inp.dg[a].is_none() && inp.dj[a].is_none() {
                return None;
            }
            let zero = vec![0.0; n * n];
            let dja = inp.dj[a].unwrap_or(&zero);
            let dga = inp.dg[a].unwrap_or(&zero);
            let mut v = kahler_form_at(n, g, dja);
            for (x, y) in v.iter_mut().zip(kahler_form_at(n, dga, j)) {
                *x += y;
            }
            Some(v)
        })
        .collect();
    let dw: Vec<Option<&[f64]>> = domega_parts.iter().map(|v| v.as_deref()).collect();
    let d_omega = d_two_form_at(n, &dw);

    // Γc^k_ij = Γ^k_ij − ½ g^{kl} J^m_i dω_mjl
    let mut chern_gamma = gamma.to_vec();
    for i in 0..n {
        for jj in 0..n {
            for l in 0..n {
                let mut a = 0.0;
                for m in 0..n {
                    a += j[i2(n, m, i)] * d_omega[i3(n, m, jj, l)];
                }
                if a == 0.0 {
                    continue;
                }
                for k in 0..n {
                    chern_gamma[i3(n, k, i, jj)] -= 0.5 * ginv[i2(n, k, l)] * a;
                }
            }
        }
    }
    let mut torsion = vec![0.0; n * n * n];
    let mut tau = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for jj in 0..n {
                torsion[i3(n, k, i, jj)] = chern_gamma[i3(n, k, i, jj)] - chern_gamma[i3(n, k, jj, i)];
            }
        }
    }
    for i in 0..n {
        for jj in 0..n {
            for k in 0..n {
                tau[i3(n, i, jj, k)] = (0..n).map(|l| g[i2(n, k, l)] * torsion[i3(n, l, i, jj)]).sum();
            }
        }
    }

    let f1 = unitary_frame_at(n, g, j, PivotOrder::Ascending)?;
    let f2 = unitary_frame_at(n, g, j, PivotOrder::Descending)?;
    let eta = eta_from_frame(n, g, &torsion, &f1);
    let eta2 = eta_from_frame(n, g, &torsion, &f2);
    let eta_frame_gap = eta.iter().zip(&eta2).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let half = n / 2;
    let eta_sq: f64 = (0..half)
        .map(|jf| (0..n).map(|i| eta[i] * f1[jf * n + i]).sum::<Complex64>().norm_sqr())
        .sum();

    // δω_b = −g^{ia} ∇_i ω_ab, ∇_i ω_ab = ∂_i ω_ab − Γ^m_ia ω_mb − Γ^m_ib ω_am
    let mut delta_omega = vec![0.0; n];
    for (b, out) in delta_omega.iter_mut().enumerate() {
        let mut s = 0.0;
        for i in 0..n {
            for a in 0..n {
                let gia = ginv[i2(n, i, a)];
                if gia == 0.0 {
                    continue;
                }
                let mut nab = dw[i].map_or(0.0, |x| x[i2(n, a, b)]);
                for m in 0..n {
                    nab -= gamma[i3(n, m, i, a)] * omega[i2(n, m, b)] + gamma[i3(n, m, i, b)] * omega[i2(n, a, m)];
                }
                s += gia * nab;
            }
        }
        *out = -s;
    }
    let theta: Vec<f64> = (0..n)
        .map(|k| ONE_FORM_J_SIGN * (0..n).map(|m| delta_omega[m] * j[i2(n, m, k)]).sum::<f64>())
        .collect();
    let theta_sq: f64 = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| ginv[i2(n, a, b)] * theta[a] * theta[b]).sum();

    let frame = Frame::new(n, g)?;
    let torsion_sq = frame.norm_sq(n, &torsion, &[true, false, false]);
    let tau_sq = frame.norm_sq(n, &tau, &[false, false, false]);
    let nabla_j = nabla_endomorphism(n, gamma, j, &inp.dj);
    let nabla_j_sq = frame.norm_sq(n, &nabla_j, &[false, true, false]);
    let cj = nabla_endomorphism(n, &chern_gamma, j, &inp.dj);
    let cg = nabla_metric(n, &chern_gamma, g, &inp.dg);
    let maxabs = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));

    Some(PointHermitian {
        omega,
        d_omega,
        chern_j_residual: maxabs(&cj),
        chern_g_residual: maxabs(&cg),
        chern_gamma,
        torsion,
        tau,
        eta,
        eta_frame_gap,
        delta_omega,
        theta,
        torsion_sq,
        tau_sq,
        eta_sq,
        theta_sq,
        nabla_j_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j0(n: usize) -> Vec<f64> {
        let mut j = vec![0.0; n * n];
        for k in 0..n / 2 {
            j[i2(n, 2 * k + 1, 2 * k)] = 1.0;
            j[i2(n, 2 * k, 2 * k + 1)] = -1.0;
        }
        j
    }

    fn id(n: usize) -> Vec<f64> {
        (0..n * n).map(|c| (c / n == c % n) as u8 as f64).collect()
    }

    #[test]
    fn standard_kahler_form() {
        let w = kahler_form_at(6, &id(6), &j0(6));
        for i in 0..6 {
            for j in 0..6 {
                let want = if i % 2 == 0 && j == i + 1 {
                    1.0
                } else if j % 2 == 0 && i == j + 1 {
                    -1.0
                } else {
                    0.0
                };
                assert_eq!(w[i2(6, i, j)], want);
            }
        }
    }

    #[test]
    fn standard_unitary_frame() {
        let (g, j) = (id(6), j0(6));
        for order in [PivotOrder::Ascending, PivotOrder::Descending] {
            let f = unitary_frame_at(6, &g, &j, order).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    let h = hermitian_product(6, &g, &f[a * 6..a * 6 + 6], &f[b * 6..b * 6 + 6]);
                    assert!((h - Complex64::new((a == b) as u8 as f64, 0.0)).norm() < 1e-12);
                }
                // J e = i e
                let e = &f[a * 6..a * 6 + 6];
                for r in 0..6 {
                    let je: Complex64 = (0..6).map(|c| e[c] * j[i2(6, r, c)]).sum();
                    assert!((je - Complex64::new(0.0, 1.0) * e[r]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn frame_norm_matches_metric_contraction() {
        let g = vec![2.0, 0.3, 0.3, 1.0];
        let (ginv, _) = linalg::invert(&g, 2).unwrap();
        let v = [0.7, -1.2];
        let f = Frame::new(2, &g).unwrap();
        let direct: f64 = (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).map(|(a, b)| ginv[i2(2, a, b)] * v[a] * v[b]).sum();
        assert!((f.norm_sq(2, &v, &[false]) - direct).abs() < 1e-14);
        let up: f64 = (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).map(|(a, b)| g[i2(2, a, b)] * v[a] * v[b]).sum();
        assert!((f.norm_sq(2, &v, &[true]) - up).abs() < 1e-14);
    }
}

//! Pointwise curvature kernels on flat row-major component arrays.
//!
//! Layouts: `gamma[k][i][j]` is `Γ^k_ij`; `riem[i][j][k][l]` is the all-lower
//! `R_ijkl = g(R(e_i, e_j) e_l, e_k)`, so `R_ijij` is a sectional curvature.
//! Derivative arguments are indexed by axis, `None` meaning identically zero.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::linalg;

#[inline]
pub(crate) fn i2(n: usize, a: usize, b: usize) -> usize {
    a * n + b
}

#[inline]
pub(crate) fn i3(n: usize, a: usize, b: usize, c: usize) -> usize {
    (a * n + b) * n + c
}

#[inline]
pub(crate) fn i4(n: usize, a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * n + b) * n + c) * n + d
}

/// Ordered pairs `(i, j)` with `i < j`.
pub fn pair_basis(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// First-kind symbols `Γ_lij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
fn christoffel_first(n: usize, dg: &[Option<&[f64]>]) -> Vec<f64> {
    let d = |a: usize, p: usize, q: usize| dg[a].map_or(0.0, |x| x[i2(n, p, q)]);
    let mut out = vec![0.0; n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                out[i3(n, l, i, j)] = 0.5 * (d(i, j, l) + d(j, i, l) - d(l, i, j));
            }
        }
    }
    out
}

fn raise_first(n: usize, ginv: &[f64], low: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for l in 0..n {
            let gkl = ginv[i2(n, k, l)];
            if gkl == 0.0 {
                continue;
            }
            for ij in 0..n * n {
                out[k * n * n + ij] += gkl * low[l * n * n + ij];
            }
        }
    }
    out
}

/// Levi-Civita symbols `Γ^k_ij`.
pub fn christoffel_at(n: usize, ginv: &[f64], dg: &[Option<&[f64]>]) -> Vec<f64> {
    raise_first(n, ginv, &christoffel_first(n, dg))
}

/// Derivatives `∂_a Γ^k_ij` from first and second metric derivatives;
/// `ddg[a][b]` is `∂_a ∂_b g`. Using the product rule on exact or spectral
/// second derivatives keeps the algebraic symmetries of `R` at roundoff.
pub fn christoffel_derivative_at(
    n: usize,
    ginv: &[f64],
    dg: &[Option<&[f64]>],
    ddg: &[Vec<Option<&[f64]>>],
) -> Vec<Option<Vec<f64>>> {
    let first = christoffel_first(n, dg);
    (0..n)
        .map(|a| {
            let dga = dg[a]?;
            let dfirst = christoffel_first(n, &ddg[a]);
            // ∂_a g^{kl} = −g^{kp} ∂_a g_pq g^{ql}
            let t = linalg::matmul(ginv, dga, n);
            let dginv: Vec<f64> = linalg::matmul(&t, ginv, n).into_iter().map(|v| -v).collect();
            let mut out = raise_first(n, ginv, &dfirst);
            let extra = raise_first(n, &dginv, &first);
            for (o, e) in out.iter_mut().zip(extra) {
                *o += e;
            }
            Some(out)
        })
        .collect()
}

/// All-lower Riemann tensor from `Γ` and its derivatives.
pub fn riemann_at(n: usize, g: &[f64], gamma: &[f64], dgamma: &[Option<&[f64]>]) -> Vec<f64> {
    let dgm = |a: usize, l: usize, j: usize, k: usize| dgamma[a].map_or(0.0, |x| x[i3(n, l, j, k)]);
    // R^l_ijk = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik
    let mut up = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut v = dgm(i, l, j, k) - dgm(j, l, i, k);
                    for m in 0..n {
                        v += gamma[i3(n, l, i, m)] * gamma[i3(n, m, j, k)]
                            - gamma[i3(n, l, j, m)] * gamma[i3(n, m, i, k)];
                    }
                    up[i4(n, l, i, j, k)] = v;
                }
            }
        }
    }
    // R_ijkl = g_km R^m_ijl
    let mut out = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = 0.0;
                    for m in 0..n {
                        v += g[i2(n, k, m)] * up[i4(n, m, i, j, l)];
                    }
                    out[i4(n, i, j, k, l)] = v;
                }
            }
        }
    }
    out
}

/// `Ric_jl = g^{ik} R_ijkl`.
pub fn ricci_at(n: usize, ginv: &[f64], riem: &[f64]) -> Vec<f64> {
    let mut ric = vec![0.0; n * n];
    for j in 0..n {
        for l in 0..n {
            let mut v = 0.0;
            for i in 0..n {
                for k in 0..n {
                    v += ginv[i2(n, i, k)] * riem[i4(n, i, j, k, l)];
                }
            }
            ric[i2(n, j, l)] = v;
        }
    }
    ric
}

/// `S = g^{jl} Ric_jl`.
pub fn scalar_at(ginv: &[f64], ric: &[f64]) -> f64 {
    ginv.iter().zip(ric).map(|(a, b)| a * b).sum()
}

/// Kulkarni–Nomizu product `(h ⊙ k)_ijkl = h_ik k_jl + h_jl k_ik − h_il k_jk − h_jk k_il`.
pub fn kulkarni_nomizu(n: usize, h: &[f64], k: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                for b in 0..n {
                    out[i4(n, i, j, a, b)] = h[i2(n, i, a)] * k[i2(n, j, b)] + h[i2(n, j, b)] * k[i2(n, i, a)]
                        - h[i2(n, i, b)] * k[i2(n, j, a)]
                        - h[i2(n, j, a)] * k[i2(n, i, b)];
                }
            }
        }
    }
    out
}

/// Weyl tensor `W = R − P ⊙ g` with Schouten `P = (Ric − S g / (2(m−1))) / (m−2)`.
pub fn weyl_at(n: usize, g: &[f64], riem: &[f64], ric: &[f64], s: f64) -> Vec<f64> {
    let m = n as f64;
    let p: Vec<f64> = ric.iter().zip(g).map(|(r, gv)| (r - s * gv / (2.0 * (m - 1.0))) / (m - 2.0)).collect();
    let pg = kulkarni_nomizu(n, &p, g);
    riem.iter().zip(pg).map(|(r, q)| r - q).collect()
}

/// Orthonormal coframe vectors: columns of `E = L^{-T}` with `g = L L^T`,
/// so that `E^T g E = I`. Row-major `E[i][a]`.
pub fn orthonormal_frame(n: usize, g: &[f64]) -> Option<Vec<f64>> {
    let l = linalg::cholesky(g, n)?;
    let (linv, _) = linalg::invert(&l, n)?;
    Some(linalg::transpose(&linv, n))
}

/// Weyl operator on 2-forms in the orthonormal pair basis `{θ^a ∧ θ^b : a < b}`.
///
/// With `⟨α, β⟩ = ½ α_ij β^ij` and `(Wα)_ij = ½ W_ijkl α^kl`, the matrix entry
/// for pairs `(ab), (cd)` is the frame component `W_abcd`. Pair symmetry of
/// `W` makes this symmetric; the stored matrix is the symmetric part so that
/// roundoff in `W` never leaks into the eigensolve.
pub fn weyl_operator_at(n: usize, frame: &[f64], weyl: &[f64]) -> Vec<f64> {
    let pairs = pair_basis(n);
    let np = pairs.len();
    // Transform W to the orthonormal frame one slot at a time.
    let mut w = weyl.to_vec();
    for slot in 0..4 {
        let stride = n.pow(3 - slot as u32);
        let mut next = vec![0.0; w.len()];
        for (c, o) in next.iter_mut().enumerate() {
            let a = (c / stride) % n;
            let base = c - a * stride;
            let mut v = 0.0;
            for i in 0..n {
                v += frame[i2(n, i, a)] * w[base + i * stride];
            }
            *o = v;
        }
        w = next;
    }
    let mut op = vec![0.0; np * np];
    for (p, &(a, b)) in pairs.iter().enumerate() {
        for (q, &(c, d)) in pairs.iter().enumerate() {
            op[p * np + q] = 0.5 * (w[i4(n, a, b, c, d)] + w[i4(n, c, d, a, b)]);
        }
    }
    op
}

/// Eigenvalues of a symmetric `size x size` matrix (ascending). `None` if
/// the result is not finite.
pub fn symmetric_eigenvalues(size: usize, m: &[f64]) -> Option<Vec<f64>> {
    let mat = DMatrix::from_row_slice(size, size, m);
    let sym = (&mat + mat.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::try_new(sym, f64::EPSILON, 10_000)?.eigenvalues.iter().copied().collect();
    if ev.iter().any(|v| !v.is_finite()) {
        return None;
    }
    ev.sort_by(f64::total_cmp);
    Some(ev)
}

/// `⟨W(α), α⟩ = ¼ W_ijkl α^ij α^kl` for a lower-index 2-form `alpha`.
pub fn weyl_pairing_at(n: usize, ginv: &[f64], weyl: &[f64], alpha: &[f64]) -> f64 {
    let t = linalg::matmul(ginv, alpha, n);
    let up = linalg::matmul(&t, ginv, n);
    let mut v = 0.0;
    for i in 0..n {
        for j in 0..n {
            let aij = up[i2(n, i, j)];
            if aij == 0.0 {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    v += weyl[i4(n, i, j, k, l)] * aij * up[i2(n, k, l)];
                }
            }
        }
    }
    0.25 * v
}

/// Curvature quantities at a single point from exact metric jets.
#[derive(Debug, Clone)]
pub struct PointCurvature {
    pub n: usize,
    pub g: Vec<f64>,
    pub ginv: Vec<f64>,
    pub gamma: Vec<f64>,
    pub riemann: Vec<f64>,
    pub ricci: Vec<f64>,
    pub scalar: f64,
    pub weyl: Vec<f64>,
    pub weyl_op: Vec<f64>,
}

impl PointCurvature {
    /// `dg[a]` is `∂_a g`, `ddg[a][b]` is `∂_a ∂_b g`.
    pub fn from_jets(n: usize, g: &[f64], dg: &[Vec<f64>], ddg: &[Vec<Vec<f64>>]) -> Option<Self> {
        let dgo: Vec<Option<&[f64]>> = dg.iter().map(|v| Some(v.as_slice())).collect();
        let ddgo: Vec<Vec<Option<&[f64]>>> =
            ddg.iter().map(|row| row.iter().map(|v| Some(v.as_slice())).collect()).collect();
        Self::evaluate(n, g, &dgo, &ddgo)
    }

    /// Same as [`PointCurvature::from_jets`] with `None` for vanishing derivatives.
    pub fn evaluate(n: usize, g: &[f64], dg: &[Option<&[f64]>], ddg: &[Vec<Option<&[f64]>>]) -> Option<Self> {
        let (ginv, _) = linalg::invert(g, n)?;
        let gamma = christoffel_at(n, &ginv, dg);
        let dgamma = christoffel_derivative_at(n, &ginv, dg, ddg);
        let dgo2: Vec<Option<&[f64]>> = dgamma.iter().map(|v| v.as_deref()).collect();
        let riemann = riemann_at(n, g, &gamma, &dgo2);
        let ricci = ricci_at(n, &ginv, &riemann);
        let scalar = scalar_at(&ginv, &ricci);
        let weyl = weyl_at(n, g, &riemann, &ricci, scalar);
        let frame = orthonormal_frame(n, g)?;
        let weyl_op = weyl_operator_at(n, &frame, &weyl);
        Some(Self { n, g: g.to_vec(), ginv, gamma, riemann, ricci, scalar, weyl, weyl_op })
    }
}

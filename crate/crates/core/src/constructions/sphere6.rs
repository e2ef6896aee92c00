//! The round six-sphere in the imaginary octonions with `J_p X = p × X`.
//!
//! Everything here is pointwise: `J` and its first derivatives are evaluated
//! in the chart `t ↦ (p + M t)/|p + M t|`, where the columns of `M` are an
//! orthonormal frame of `T_p S⁶`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hermitian::kernels::nijenhuis_at;
use crate::jet::Jet2;

/// Multiplication triples `e_a e_b = e_c` of the imaginary octonion units.
const FANO: [(usize, usize, usize); 7] = [(0, 1, 2), (0, 3, 4), (0, 6, 5), (1, 3, 5), (1, 4, 6), (2, 3, 6), (2, 5, 4)];

/// Octonion cross product on R⁷.
pub fn cross(x: &[f64], y: &[f64]) -> [f64; 7] {
    let mut out = [0.0; 7];
    for &(a, b, c) in &FANO {
        for (i, j, k) in [(a, b, c), (b, c, a), (c, a, b)] {
            out[k] += x[i] * y[j] - x[j] * y[i];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
pub struct S6Round;

pub fn s6_round() -> S6Round {
    S6Round
}

/// `J`, its derivatives and the Nijenhuis tensor at one point of S⁶.
#[derive(Debug, Clone)]
pub struct S6Point {
    pub p: [f64; 7],
    /// Tangent frame `M`, 7×6.
    pub frame: DMatrix<f64>,
    /// `J` in the frame, row-major 6×6.
    pub j: Vec<f64>,
    /// `∂_a J` in the chart, one row-major 6×6 block per direction.
    pub dj: Vec<Vec<f64>>,
    /// Round metric in the chart at `t = 0`.
    pub metric: Vec<f64>,
    pub nijenhuis: Vec<f64>,
    pub square_residual: f64,
    pub compat_residual: f64,
}

impl S6Point {
    /// `|N|` with the round metric (orthonormal at `t = 0`).
    pub fn nijenhuis_norm(&self) -> f64 {
        self.nijenhuis.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl S6Round {
    /// Seeded uniform points on S⁶.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<[f64; 7]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let mut x = [0.0; 7];
            for v in &mut x {
                *v = rng.random_range(-1.0..1.0);
            }
            let r2: f64 = x.iter().map(|v| v * v).sum();
            if r2 > 1.0 || r2 < 1e-4 {
                continue;
            }
            let r = r2.sqrt();
            out.push(x.map(|v| v / r));
        }
        out
    }

    /// Orthonormal basis of `p^⊥`.
    pub fn tangent_frame(&self, p: &[f64; 7]) -> DMatrix<f64> {
        let skip = (0..7).max_by(|&a, &b| p[a].abs().total_cmp(&p[b].abs())).unwrap();
        let mut m = DMatrix::zeros(7, 7);
        for r in 0..7 {
            m[(r, 0)] = p[r];
        }
        let mut col = 1;
        for k in (0..7).filter(|&k| k != skip) {
            m[(k, col)] = 1.0;
            col += 1;
        }
        let q = m.qr().q();
        q.columns(1, 6).into_owned()
    }

    pub fn at(&self, p: &[f64; 7]) -> S6Point {
        let m = self.tangent_frame(p);
        // φ(t) = (p + M t) / |p + M t|
        let t: [Jet2<6>; 6] = std::array::from_fn(|a| Jet2::variable(a, 0.0));
        let raw: Vec<Jet2<6>> = (0..7)
            .map(|r| (0..6).fold(Jet2::constant(p[r]), |acc, a| acc + t[a] * m[(r, a)]))
            .collect();
        let inv_norm = raw.iter().fold(Jet2::constant(0.0), |acc, v| acc + *v * *v).sqrt().recip();
        let phi: Vec<Jet2<6>> = raw.iter().map(|v| *v * inv_norm).collect();
        let phi0: Vec<f64> = phi.iter().map(|v| v.v).collect();
        let dphi = DMatrix::from_fn(7, 6, |r, b| phi[r].g[b]);
        let hess: Vec<DMatrix<f64>> = (0..6).map(|a| DMatrix::from_fn(7, 6, |r, b| phi[r].h[a][b])).collect();

        let cross_cols = |u: &[f64], d: &DMatrix<f64>| -> DMatrix<f64> {
            let mut out = DMatrix::zeros(7, 6);
            for b in 0..6 {
                let col: Vec<f64> = d.column(b).iter().copied().collect();
                let c = cross(u, &col);
                for r in 0..7 {
                    out[(r, b)] = c[r];
                }
            }
            out
        };
        let c = cross_cols(&phi0, &dphi);
        let a_mat = dphi.transpose() * &dphi;
        let a_inv = a_mat.clone().try_inverse().expect("chart differential has full rank");
        let b_mat = dphi.transpose() * &c;
        let j = &a_inv * &b_mat;

        let dj: Vec<DMatrix<f64>> = (0..6)
            .map(|a| {
                let ha = &hess[a];
                let dphi_a: Vec<f64> = dphi.column(a).iter().copied().collect();
                let dc = cross_cols(&dphi_a, &dphi) + cross_cols(&phi0, ha);
                let da = ha.transpose() * &dphi + dphi.transpose() * ha;
                let db = ha.transpose() * &c + dphi.transpose() * dc;
                &a_inv * (db - da * &j)
            })
            .collect();

        let rm = |x: &DMatrix<f64>| -> Vec<f64> { (0..36).map(|k| x[(k / 6, k % 6)]).collect() };
        let jv = rm(&j);
        let djv: Vec<Vec<f64>> = dj.iter().map(rm).collect();
        let djs: Vec<Option<&[f64]>> = djv.iter().map(|v| Some(v.as_slice())).collect();
        let nijenhuis = nijenhuis_at(6, &jv, &djs);

        let id = DMatrix::<f64>::identity(6, 6);
        let square_residual = (&j * &j + &id).abs().max();
        let compat_residual = (j.transpose() * &a_mat * &j - &a_mat).abs().max();
        S6Point {
            p: *p,
            frame: m,
            j: jv,
            dj: djv,
            metric: rm(&a_mat),
            nijenhuis,
            square_residual,
            compat_residual,
        }
    }
}

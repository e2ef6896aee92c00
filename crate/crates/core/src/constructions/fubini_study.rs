//! Fubini–Study metric on the affine chart `C² ⊂ CP²`, times a flat `R²`,
//! with analytic second-order jets.

use crate::hermitian::kernels::{d_two_form_at, kahler_form_at};
use crate::jet::Jet2;
use crate::riemann::kernels::PointCurvature;

/// Real coordinates `(x₁, y₁, x₂, y₂, x₃, y₃)` with `z_a = x_a + i y_a`;
/// the standard structure `J ∂x_a = ∂y_a` is Kähler for this metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FubiniStudyProduct {
    /// Overall scale of the Fubini–Study factor.
    pub scale: f64,
}

impl Default for FubiniStudyProduct {
    fn default() -> Self {
        Self { scale: 1.0 }
    }
}

/// Metric and its jets at one point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: Vec<f64>,
    pub dg: Vec<Vec<f64>>,
    pub ddg: Vec<Vec<Vec<f64>>>,
}

impl FubiniStudyProduct {
    pub const DIM: usize = 6;

    pub fn metric_jet(&self, x: &[f64; 6]) -> MetricJet {
        let v: [Jet2<6>; 6] = std::array::from_fn(|i| Jet2::variable(i, x[i]));
        let r = Jet2::constant(1.0) + v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3];
        let ir = r.recip();
        let ir2 = ir * ir;
        let mut g = [[Jet2::<6>::constant(0.0); 6]; 6];
        for a in 0..2 {
            for b in 0..2 {
                let (xa, ya, xb, yb) = (v[2 * a], v[2 * a + 1], v[2 * b], v[2 * b + 1]);
                // H_ab = δ_ab / r − z_a z̄_b / r²
                let delta = if a == b { ir } else { Jet2::constant(0.0) };
                let re = (delta - (xa * xb + ya * yb) * ir2).scale(self.scale);
                let im = ((xa * yb - ya * xb) * ir2).scale(-self.scale);
                g[2 * a][2 * b] = re;
                g[2 * a + 1][2 * b + 1] = re;
                g[2 * a][2 * b + 1] = im;
                g[2 * a + 1][2 * b] = -im;
            }
        }
        g[4][4] = Jet2::constant(1.0);
        g[5][5] = Jet2::constant(1.0);
        let n = Self::DIM;
        let flat = |f: &dyn Fn(&Jet2<6>) -> f64| -> Vec<f64> { (0..n * n).map(|k| f(&g[k / n][k % n])).collect() };
        MetricJet {
            g: flat(&|j| j.v),
            dg: (0..n).map(|a| flat(&|j| j.g[a])).collect(),
            ddg: (0..n).map(|a| (0..n).map(|b| flat(&|j| j.h[a][b])).collect()).collect(),
        }
    }

    pub fn j(&self) -> Vec<f64> {
        let n = Self::DIM;
        let mut j = vec![0.0; n * n];
        for k in 0..3 {
            j[(2 * k + 1) * n + 2 * k] = 1.0;
            j[2 * k * n + 2 * k + 1] = -1.0;
        }
        j
    }

    pub fn curvature(&self, x: &[f64; 6]) -> Option<PointCurvature> {
        let m = self.metric_jet(x);
        PointCurvature::from_jets(Self::DIM, &m.g, &m.dg, &m.ddg)
    }

    /// `ω = g(J·,·)` at `x`.
    pub fn omega(&self, x: &[f64; 6]) -> Vec<f64> {
        kahler_form_at(Self::DIM, &self.metric_jet(x).g, &self.j())
    }

    /// `max |dω|` at `x` (zero for a Kähler metric).
    pub fn d_omega_residual(&self, x: &[f64; 6]) -> f64 {
        let m = self.metric_jet(x);
        let j = self.j();
        let dw: Vec<Vec<f64>> = m.dg.iter().map(|dg| kahler_form_at(Self::DIM, dg, &j)).collect();
        let slices: Vec<Option<&[f64]>> = dw.iter().map(|v| Some(v.as_slice())).collect();
        d_two_form_at(Self::DIM, &slices).iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

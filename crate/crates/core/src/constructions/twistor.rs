//! Orthogonal complex structures on R⁴ parametrized by the unit sphere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matmul, transpose};

/// Three anticommuting orthogonal complex structures on R⁴ with `I₁I₂ = I₃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistorFrame {
    pub i1: [f64; 16],
    pub i2: [f64; 16],
    pub i3: [f64; 16],
}

impl Default for TwistorFrame {
    /// Left multiplication by `i`, `j`, `k` on the quaternions in the basis `(1, i, j, k)`.
    fn default() -> Self {
        #[rustfmt::skip]
        let i1 = [
            0.0, -1.0, 0.0, 0.0,
            1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, -1.0,
            0.0, 0.0, 1.0, 0.0,
        ];
        #[rustfmt::skip]
        let i2 = [
            0.0, 0.0, -1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            1.0, 0.0, 0.0, 0.0,
            0.0, -1.0, 0.0, 0.0,
        ];
        #[rustfmt::skip]
        let i3 = [
            0.0, 0.0, 0.0, -1.0,
            0.0, 0.0, -1.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            1.0, 0.0, 0.0, 0.0,
        ];
        Self { i1, i2, i3 }
    }
}

impl TwistorFrame {
    /// Largest violation of the frame relations.
    pub fn relation_residual(&self) -> f64 {
        let ms = [&self.i1, &self.i2, &self.i3];
        let id: Vec<f64> = (0..16).map(|c| (c / 4 == c % 4) as u8 as f64).collect();
        let mut r = 0.0_f64;
        for (a, ma) in ms.iter().enumerate() {
            let sq = matmul(&ma[..], &ma[..], 4);
            let ortho = matmul(&transpose(&ma[..], 4), &ma[..], 4);
            for c in 0..16 {
                r = r.max((sq[c] + id[c]).abs()).max((ortho[c] - id[c]).abs());
            }
            for mb in ms.iter().skip(a + 1) {
                let ab = matmul(&ma[..], &mb[..], 4);
                let ba = matmul(&mb[..], &ma[..], 4);
                for c in 0..16 {
                    r = r.max((ab[c] + ba[c]).abs());
                }
            }
        }
        let i12 = matmul(&self.i1, &self.i2, 4);
        for c in 0..16 {
            r = r.max((i12[c] - self.i3[c]).abs());
        }
        r
    }

    /// `J(n) = n₁I₁ + n₂I₂ + n₃I₃` without the unit check.
    pub fn combine(&self, n: [f64; 3]) -> [f64; 16] {
        let mut out = [0.0; 16];
        for c in 0..16 {
            out[c] = n[0] * self.i1[c] + n[1] * self.i2[c] + n[2] * self.i3[c];
        }
        out
    }
}

/// Complex structure on R⁴ attached to a unit vector.
pub fn twistor_j(n: [f64; 3], frame: &TwistorFrame) -> Result<[f64; 16]> {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnit { norm });
    }
    Ok(frame.combine(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_frame_relations() {
        assert!(TwistorFrame::default().relation_residual() < 1e-15);
    }

    #[test]
    fn axis_and_antipode() {
        let f = TwistorFrame::default();
        assert_eq!(twistor_j([1.0, 0.0, 0.0], &f).unwrap(), f.i1);
        let n = [0.6, 0.0, 0.8];
        let a = twistor_j(n, &f).unwrap();
        let b = twistor_j([-0.6, 0.0, -0.8], &f).unwrap();
        for c in 0..16 {
            assert_eq!(a[c], -b[c]);
        }
        assert!(matches!(twistor_j([1.0, 1.0, 0.0], &f), Err(Error::NotUnit { .. })));
    }
}

//! Twistor-type complex structures on `E × T⁴` from doubly periodic maps `E → CP¹`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::twistor::TwistorFrame;
use super::weierstrass::{EllipticCurveSpec, Weierstrass};
use super::{row_major, standard_j};
use crate::error::{Error, Result};
use crate::gridcalc::{FlatChart, Slot, TensorField};
use crate::hermitian::OrthogonalACS;

/// Take `n(f̄)` instead of `n(f)`. Chosen so that the resulting `J` is
/// integrable: the Nijenhuis tensor then decays spectrally under refinement.
const CONJUGATE_SPHERE_MAP: bool = false;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MapKind {
    /// `f = ℘`
    P,
    /// `f = ℘′`
    PPrime,
    /// `f = ℘²`
    PSquared,
}

impl MapKind {
    pub fn degree(self) -> u32 {
        match self {
            MapKind::P => 2,
            MapKind::PPrime => 3,
            MapKind::PSquared => 4,
        }
    }

    pub fn from_degree(d: u32) -> Option<Self> {
        match d {
            2 => Some(MapKind::P),
            3 => Some(MapKind::PPrime),
            4 => Some(MapKind::PSquared),
            _ => None,
        }
    }

    pub fn all() -> [MapKind; 3] {
        [MapKind::P, MapKind::PPrime, MapKind::PSquared]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSVSpec {
    pub curve: EllipticCurveSpec,
    /// Columns generate the fiber lattice in R⁴.
    pub fiber_basis: DMatrix<f64>,
    pub map_kind: MapKind,
    pub resolution: usize,
}

impl BSVSpec {
    pub fn new(map_kind: MapKind, resolution: usize) -> Self {
        Self { curve: EllipticCurveSpec::default(), fiber_basis: DMatrix::identity(4, 4), map_kind, resolution }
    }

    /// `v₂ = |det(fiber_basis)|`.
    pub fn fiber_volume(&self) -> f64 {
        self.fiber_basis.determinant().abs()
    }

    pub fn validate(&self) -> Result<()> {
        self.curve.validate()?;
        if self.fiber_basis.shape() != (4, 4) {
            return Err(Error::Shape("fiber_basis must be 4x4".into()));
        }
        let v2 = self.fiber_volume();
        if !(v2 > 0.0) || !v2.is_finite() {
            return Err(Error::SingularBasis { det: v2 });
        }
        Ok(())
    }

    /// Lattice basis of `E × T⁴`: the curve periods as real 2-vectors, then the fiber.
    pub fn basis(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(6, 6);
        let (w1, w2) = (self.curve.omega1(), self.curve.omega2());
        b[(0, 0)] = w1.re;
        b[(1, 0)] = w1.im;
        b[(0, 1)] = w2.re;
        b[(1, 1)] = w2.im;
        b.view_mut((2, 2), (4, 4)).copy_from(&self.fiber_basis);
        b
    }
}

/// `[p : q] ∈ CP¹` to the unit sphere, `[ζ : 1] ↦ (2ζ, 1 − |ζ|²)/(1 + |ζ|²)`.
pub fn sphere_point(p: Complex64, q: Complex64) -> [f64; 3] {
    let pq = p * q.conj();
    let (a, b) = (p.norm_sqr(), q.norm_sqr());
    let s = a + b;
    [2.0 * pq.re / s, 2.0 * pq.im / s, (b - a) / s]
}

/// The map `z ↦ n(f(z))` evaluated in homogeneous form.
#[derive(Debug, Clone)]
pub struct SphereMap {
    wp: Weierstrass,
    kind: MapKind,
}

impl SphereMap {
    pub fn new(curve: &EllipticCurveSpec, kind: MapKind) -> Result<Self> {
        Ok(Self { wp: Weierstrass::new(curve)?, kind })
    }

    pub fn weierstrass(&self) -> &Weierstrass {
        &self.wp
    }

    pub fn value(&self, z: Complex64) -> Result<Complex64> {
        let (p, dp) = self.wp.eval(z)?;
        Ok(match self.kind {
            MapKind::P => p,
            MapKind::PPrime => dp,
            MapKind::PSquared => p * p,
        })
    }

    pub fn eval(&self, z: Complex64) -> Result<[f64; 3]> {
        let mut zeta = self.value(z)?;
        if CONJUGATE_SPHERE_MAP {
            zeta = zeta.conj();
        }
        let one = Complex64::new(1.0, 0.0);
        let n = if zeta.norm() <= 1.0 { sphere_point(zeta, one) } else { sphere_point(one, 1.0 / zeta) };
        if n.iter().any(|v| !v.is_finite()) {
            return Err(Error::PoleProximity { distance: 0.0 });
        }
        Ok(n)
    }
}

/// A constructed twistor torus.
#[derive(Debug, Clone)]
pub struct BsvTorus {
    pub spec: BSVSpec,
    pub chart: Arc<FlatChart>,
    pub acs: OrthogonalACS,
}

impl BsvTorus {
    pub fn degree(&self) -> u32 {
        self.spec.map_kind.degree()
    }

    pub fn fiber_volume(&self) -> f64 {
        self.spec.fiber_volume()
    }
}

/// Build the chart, flat metric and `J = J_E ⊕ J(n(f(z)))` in lattice-fraction coordinates.
pub fn bsv(spec: &BSVSpec) -> Result<BsvTorus> {
    spec.validate()?;
    let basis = spec.basis();
    let chart = Arc::new(FlatChart::new(basis.clone(), vec![0, 1], spec.resolution)?.with_phase(spec.curve.pole_offset));
    let map = SphereMap::new(&spec.curve, spec.map_kind)?;
    let frame = TwistorFrame::default();
    let binv = basis.clone().try_inverse().ok_or(Error::SingularBasis { det: 0.0 })?;
    let je = standard_j(2);
    let (w1, w2) = (spec.curve.omega1(), spec.curve.omega2());

    let pts: Vec<usize> = (0..chart.num_points()).collect();
    let per_point: Vec<Result<Vec<f64>>> = {
        use rayon::prelude::*;
        pts.par_iter()
            .map(|&p| {
                let x = chart.point(p);
                let z = w1 * x[0] + w2 * x[1];
                let n = map.eval(z)?;
                let jf = frame.combine(n);
                let mut j = DMatrix::zeros(6, 6);
                j.view_mut((0, 0), (2, 2)).copy_from(&je);
                for a in 0..4 {
                    for b in 0..4 {
                        j[(2 + a, 2 + b)] = jf[a * 4 + b];
                    }
                }
                Ok(row_major(&(&binv * j * &basis)))
            })
            .collect()
    };
    let mut values = Vec::with_capacity(chart.num_points() * 36);
    for v in per_point {
        values.extend(v?);
    }
    let jfield = TensorField::new(chart.clone(), vec![Slot::Upper, Slot::Lower], values)?;
    let g = row_major(&chart.coordinate_metric());
    let gfield = TensorField::constant(chart.clone(), vec![Slot::Lower, Slot::Lower], &g)?;
    let acs = OrthogonalACS::new(jfield, gfield)?;
    Ok(BsvTorus { spec: spec.clone(), chart, acs })
}

fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Signed count of preimages of the regular value `target` under the sphere map,
/// from a triangulated `resolution²` grid on the curve.
pub fn sphere_map_degree(curve: &EllipticCurveSpec, kind: MapKind, resolution: usize, target: [f64; 3]) -> Result<i64> {
    let map = SphereMap::new(curve, kind)?;
    let (w1, w2) = (curve.omega1(), curve.omega2());
    let r = resolution;
    let off = curve.pole_offset;
    let mut vals = Vec::with_capacity(r * r);
    for i in 0..r {
        for j in 0..r {
            let z = w1 * ((i as f64 + off) / r as f64) + w2 * ((j as f64 + off) / r as f64);
            vals.push(map.eval(z)?);
        }
    }
    let at = |i: usize, j: usize| vals[(i % r) * r + (j % r)];
    let mut count = 0i64;
    for i in 0..r {
        for j in 0..r {
            let (a, b, c, d) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            for (p, q, s) in [(a, b, c), (a, c, d)] {
                let orient = det3(p, q, s);
                let s1 = det3(p, q, target);
                let s2 = det3(q, s, target);
                let s3 = det3(s, p, target);
                let front = target[0] * (p[0] + q[0] + s[0]) + target[1] * (p[1] + q[1] + s[1]) + target[2] * (p[2] + q[2] + s[2]);
                if front <= 0.0 {
                    continue;
                }
                if s1 > 0.0 && s2 > 0.0 && s3 > 0.0 && orient > 0.0 {
                    count += 1;
                } else if s1 < 0.0 && s2 < 0.0 && s3 < 0.0 && orient < 0.0 {
                    count -= 1;
                }
            }
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_sphere_point() {
        let z = Complex64::new(0.3, -0.4);
        let one = Complex64::new(1.0, 0.0);
        let a = sphere_point(z, one);
        let b = sphere_point(one, 1.0 / z);
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-14);
        }
        assert_eq!(sphere_point(one, Complex64::new(0.0, 0.0)), [0.0, 0.0, -1.0]);
    }

    #[test]
    fn degrees_of_map_kinds() {
        assert_eq!(MapKind::all().map(|k| k.degree()), [2, 3, 4]);
        assert_eq!(MapKind::from_degree(3), Some(MapKind::PPrime));
    }
}

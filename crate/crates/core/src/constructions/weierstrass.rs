//! Weierstrass ℘ by truncated lattice sums with an analytic tail correction.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `ζ(2k)` for `k = 1..=10`.
fn zeta_even(k: usize) -> f64 {
    let p = PI.powi(2 * k as i32);
    match k {
        1 => p / 6.0,
        2 => p / 90.0,
        3 => p / 945.0,
        4 => p / 9450.0,
        5 => p / 93555.0,
        6 => 691.0 * p / 638_512_875.0,
        7 => 2.0 * p / 18_243_225.0,
        8 => 3617.0 * p / 325_641_566_250.0,
        9 => 43867.0 * p / 38_979_295_480_125.0,
        10 => 174_611.0 * p / 1_531_329_465_290_625.0,
        _ => panic!("zeta_even supports k <= 10"),
    }
}

const TAIL_TERMS: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticCurveSpec {
    /// Periods `(ω₁, ω₂)` as `[re, im]` pairs with `Im(ω₂/ω₁) > 0`.
    pub periods: [[f64; 2]; 2],
    /// Number of square lattice shells summed explicitly (at least 20).
    pub truncation_radius: usize,
    /// Grid phase shift in cells keeping samples off lattice points.
    pub pole_offset: f64,
}

impl Default for EllipticCurveSpec {
    fn default() -> Self {
        Self { periods: [[2.0, 0.0], [0.0, 2.0]], truncation_radius: 20, pole_offset: 0.5 }
    }
}

impl EllipticCurveSpec {
    pub fn omega1(&self) -> Complex64 {
        Complex64::new(self.periods[0][0], self.periods[0][1])
    }

    pub fn omega2(&self) -> Complex64 {
        Complex64::new(self.periods[1][0], self.periods[1][1])
    }

    pub fn tau(&self) -> Complex64 {
        self.omega2() / self.omega1()
    }

    /// Area of a fundamental cell.
    pub fn area(&self) -> f64 {
        (self.omega1().conj() * self.omega2()).im.abs()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau().im > 0.0) {
            return Err(Error::InvalidSpec("periods must satisfy Im(w2/w1) > 0".into()));
        }
        if self.truncation_radius < 20 {
            return Err(Error::InvalidSpec(format!(
                "truncation_radius must be at least 20, got {}",
                self.truncation_radius
            )));
        }
        if !(self.pole_offset > 0.0 && self.pole_offset < 1.0) {
            return Err(Error::InvalidSpec("pole_offset must lie in (0, 1) cells".into()));
        }
        Ok(())
    }
}

/// Eisenstein series `G_{2k}(τ) = Σ' (m + nτ)^{-2k}` by its q-expansion.
pub fn eisenstein_tau(k: usize, tau: Complex64) -> Complex64 {
    let q = (Complex64::new(0.0, 2.0 * PI) * tau).exp();
    let mut fact = 1.0;
    for i in 1..2 * k {
        fact *= i as f64;
    }
    let pref = Complex64::new(0.0, 2.0 * PI).powi(2 * k as i32) * (2.0 / fact);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut qn = Complex64::new(1.0, 0.0);
    for n in 1..400usize {
        qn *= q;
        let sigma: f64 = (1..=n).filter(|d| n % d == 0).map(|d| (d as f64).powi(2 * k as i32 - 1)).sum();
        let term = qn * sigma;
        sum += term;
        if term.norm() < 1e-18 * sum.norm().max(1e-300) && n > 5 {
            break;
        }
    }
    Complex64::new(2.0 * zeta_even(k), 0.0) + pref * sum
}

/// Lattice sums for ℘ and ℘′ on a fixed curve.
#[derive(Debug, Clone)]
pub struct Weierstrass {
    spec: EllipticCurveSpec,
    points: Vec<Complex64>,
    /// `T_{2k} = G_{2k} − Σ_{inner} w^{-2k}` for `k = 2..`.
    tail: Vec<Complex64>,
    g2: Complex64,
    g3: Complex64,
}

impl Weierstrass {
    pub fn new(spec: &EllipticCurveSpec) -> Result<Self> {
        spec.validate()?;
        let (w1, w2) = (spec.omega1(), spec.omega2());
        let r = spec.truncation_radius as i64;
        let mut points = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
        for m in -r..=r {
            for n in -r..=r {
                if m != 0 || n != 0 {
                    points.push(w1 * m as f64 + w2 * n as f64);
                }
            }
        }
        let tau = spec.tau();
        let eis: Vec<Complex64> = (2..2 + TAIL_TERMS).map(|k| eisenstein_tau(k, tau) * w1.powi(-2 * k as i32)).collect();
        let tail = (0..TAIL_TERMS)
            .map(|i| {
                let k = (i + 2) as i32;
                let inner: Complex64 = points.iter().map(|w| w.powi(-2 * k)).sum();
                eis[i] - inner
            })
            .collect();
        Ok(Self { spec: spec.clone(), points, tail, g2: eis[0] * 60.0, g3: eis[1] * 140.0 })
    }

    pub fn spec(&self) -> &EllipticCurveSpec {
        &self.spec
    }

    pub fn g2(&self) -> Complex64 {
        self.g2
    }

    pub fn g3(&self) -> Complex64 {
        self.g3
    }

    /// Representative of `z` with lattice coordinates in `[-½, ½)`.
    pub fn reduce(&self, z: Complex64) -> Complex64 {
        let (w1, w2) = (self.spec.omega1(), self.spec.omega2());
        let det = w1.re * w2.im - w2.re * w1.im;
        let a = (z.re * w2.im - w2.re * z.im) / det;
        let b = (w1.re * z.im - z.re * w1.im) / det;
        z - w1 * (a + 0.5).floor() - w2 * (b + 0.5).floor()
    }

    fn near_pole(&self, z: Complex64, min_dist: f64) -> Result<()> {
        let d = z.norm();
        if d < min_dist {
            return Err(Error::PoleProximity { distance: d });
        }
        Ok(())
    }

    /// `(℘(z), ℘′(z))`. Rejects points within `1e-8 |ω₁|` of a lattice point.
    pub fn eval(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let z = self.reduce(z);
        self.near_pole(z, 1e-8 * self.spec.omega1().norm())?;
        let mut p = z.powi(-2);
        let mut dp = z.powi(-3) * -2.0;
        for &w in &self.points {
            let d = z - w;
            let inv = 1.0 / d;
            let inv2 = inv * inv;
            p += inv2 - 1.0 / (w * w);
            dp += inv2 * inv * -2.0;
        }
        let z2 = z * z;
        let mut zp = z2; // z^{2k-2} for k = 2
        let mut zd = z; // z^{2k-3} for k = 2
        for (i, t) in self.tail.iter().enumerate() {
            let k = (i + 2) as f64;
            p += zp * *t * (2.0 * k - 1.0);
            dp += zd * *t * ((2.0 * k - 1.0) * (2.0 * k - 2.0));
            zp *= z2;
            zd *= z2;
        }
        Ok((p, dp))
    }

    pub fn p(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval(z)?.0)
    }

    pub fn p_prime(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval(z)?.1)
    }

    /// `℘″ = 6℘² − g₂/2`.
    pub fn p_second(&self, p: Complex64) -> Complex64 {
        p * p * 6.0 - self.g2 * 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_lattice_invariants() {
        // For the square lattice g3 vanishes and g2 is real.
        let w = Weierstrass::new(&EllipticCurveSpec::default()).unwrap();
        assert!(w.g3().norm() < 1e-12);
        assert!(w.g2().im.abs() < 1e-12 && w.g2().re > 0.0);
    }

    #[test]
    fn evenness_and_pole_rejection() {
        let w = Weierstrass::new(&EllipticCurveSpec::default()).unwrap();
        let z = Complex64::new(0.31, 0.47);
        assert!((w.p(z).unwrap() - w.p(-z).unwrap()).norm() < 1e-9);
        assert!((w.p_prime(z).unwrap() + w.p_prime(-z).unwrap()).norm() < 1e-9);
        assert!(matches!(w.p(Complex64::new(2.0, 2.0)), Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn bad_specs_rejected() {
        let mut s = EllipticCurveSpec::default();
        s.truncation_radius = 5;
        assert!(s.validate().is_err());
        let mut s = EllipticCurveSpec::default();
        s.periods = [[0.0, 2.0], [2.0, 0.0]];
        assert!(s.validate().is_err());
    }
}

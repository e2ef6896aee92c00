//! Second-order forward-mode jets in `N` variables.
//!
//! Used for pointwise analytic evaluation of metrics and structures whose
//! curvature or Nijenhuis tensor is checked away from any grid.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
    pub h: [[f64; N]; N],
}

impl<const N: usize> Jet2<N> {
    pub fn constant(v: f64) -> Self {
        Self { v, g: [0.0; N], h: [[0.0; N]; N] }
    }

    /// The coordinate function `x_i` evaluated at `value`.
    pub fn variable(i: usize, value: f64) -> Self {
        let mut j = Self::constant(value);
        j.g[i] = 1.0;
        j
    }

    /// Apply a scalar function given its value and first two derivatives at `self.v`.
    fn chain(self, f: f64, df: f64, ddf: f64) -> Self {
        let mut out = Self::constant(f);
        for a in 0..N {
            out.g[a] = df * self.g[a];
            for b in 0..N {
                out.h[a][b] = df * self.h[a][b] + ddf * self.g[a] * self.g[b];
            }
        }
        out
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v, -1.0 / (self.v * self.v))
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn scale(self, s: f64) -> Self {
        let mut out = self;
        out.v *= s;
        for a in 0..N {
            out.g[a] *= s;
            for b in 0..N {
                out.h[a][b] *= s;
            }
        }
        out
    }
}

impl<const N: usize> Add for Jet2<N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut out = self;
        out.v += o.v;
        for a in 0..N {
            out.g[a] += o.g[a];
            for b in 0..N {
                out.h[a][b] += o.h[a][b];
            }
        }
        out
    }
}

impl<const N: usize> Sub for Jet2<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<const N: usize> Neg for Jet2<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Jet2<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::constant(self.v * o.v);
        for a in 0..N {
            out.g[a] = self.g[a] * o.v + self.v * o.g[a];
            for b in 0..N {
                out.h[a][b] =
                    self.h[a][b] * o.v + self.v * o.h[a][b] + self.g[a] * o.g[b] + self.g[b] * o.g[a];
            }
        }
        out
    }
}

impl<const N: usize> Div for Jet2<N> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<const N: usize> Add<f64> for Jet2<N> {
    type Output = Self;
    fn add(mut self, s: f64) -> Self {
        self.v += s;
        self
    }
}

impl<const N: usize> Mul<f64> for Jet2<N> {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_and_hessian() {
        let x = Jet2::<2>::variable(0, 1.5);
        let y = Jet2::<2>::variable(1, -0.5);
        let f = x * x * y + (x * y).exp();
        let (xv, yv) = (1.5_f64, -0.5_f64);
        let e = (xv * yv).exp();
        assert!((f.v - (xv * xv * yv + e)).abs() < 1e-14);
        assert!((f.g[0] - (2.0 * xv * yv + yv * e)).abs() < 1e-14);
        assert!((f.g[1] - (xv * xv + xv * e)).abs() < 1e-14);
        assert!((f.h[0][1] - (2.0 * xv + e + xv * yv * e)).abs() < 1e-13);
        assert!((f.h[1][1] - xv * xv * e).abs() < 1e-14);
    }

    #[test]
    fn quotient_and_log() {
        let x = Jet2::<1>::variable(0, 2.0);
        let f = (x * x + 1.0).ln() / x;
        let fd = |t: f64| (t * t + 1.0).ln() / t;
        let h = 1e-4;
        let d1 = (fd(2.0 + h) - fd(2.0 - h)) / (2.0 * h);
        let d2 = (fd(2.0 + h) - 2.0 * fd(2.0) + fd(2.0 - h)) / (h * h);
        assert!((f.g[0] - d1).abs() < 1e-7);
        assert!((f.h[0][0] - d2).abs() < 1e-5);
    }
}

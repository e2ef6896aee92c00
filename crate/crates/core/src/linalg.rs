//! Small dense kernels used pointwise on every grid sample.

use num_complex::Complex64;

/// Inverse and determinant of a row-major `n x n` matrix by Gauss-Jordan
/// elimination with partial pivoting. `None` when a pivot vanishes.
pub fn invert(m: &[f64], n: usize) -> Option<(Vec<f64>, f64)> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let scale = m.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))?;
        let pv = a[piv * n + col];
        if pv.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
            det = -det;
        }
        det *= pv;
        let r = 1.0 / pv;
        for k in 0..n {
            a[col * n + k] *= r;
            inv[col * n + k] *= r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col];
            if f != 0.0 {
                for k in 0..n {
                    a[row * n + k] -= f * a[col * n + k];
                    inv[row * n + k] -= f * inv[col * n + k];
                }
            }
        }
    }
    Some((inv, det))
}

/// Row-major product of `n x n` matrices.
pub fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

pub fn transpose(a: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

/// Determinant of a small complex matrix (row-major) by partial-pivot elimination.
pub fn complex_det(m: &mut [Complex64], n: usize) -> Complex64 {
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x * n + col].norm_sqr().total_cmp(&m[y * n + col].norm_sqr()));
        let Some(piv) = piv else { return det };
        let pv = m[piv * n + col];
        if pv.norm_sqr() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            det = -det;
        }
        det *= pv;
        for row in col + 1..n {
            let f = m[row * n + col] / pv;
            if f.norm_sqr() != 0.0 {
                for k in col..n {
                    let v = m[col * n + k];
                    m[row * n + k] -= f * v;
                }
            }
        }
    }
    det
}

/// Inverse of a small complex matrix (row-major); `None` if singular.
pub fn complex_invert(m: &[Complex64], n: usize) -> Option<Vec<Complex64>> {
    let mut a = m.to_vec();
    let mut inv = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        inv[i * n + i] = Complex64::new(1.0, 0.0);
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x * n + col].norm_sqr().total_cmp(&a[y * n + col].norm_sqr()))?;
        if a[piv * n + col].norm() < 1e-14 {
            return None;
        }
        for k in 0..n {
            a.swap(piv * n + k, col * n + k);
            inv.swap(piv * n + k, col * n + k);
        }
        let r = a[col * n + col].inv();
        for k in 0..n {
            a[col * n + k] *= r;
            inv[col * n + k] *= r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col];
            if f.norm_sqr() != 0.0 {
                for k in 0..n {
                    let (av, iv) = (a[col * n + k], inv[col * n + k]);
                    a[row * n + k] -= f * av;
                    inv[row * n + k] -= f * iv;
                }
            }
        }
    }
    Some(inv)
}

/// Lower Cholesky factor of a symmetric positive-definite matrix (row-major).
pub fn cholesky(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let (inv, det) = invert(&m, 3).unwrap();
        let id = matmul(&m, &inv, 3);
        for i in 0..3 {
            for j in 0..3 {
                assert!((id[i * 3 + j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert!((det - 21.29).abs() < 1e-12);
    }

    #[test]
    fn singular_is_none() {
        assert!(invert(&[1.0, 2.0, 2.0, 4.0], 2).is_none());
    }

    #[test]
    fn complex_det_matches_real() {
        let mut m: Vec<Complex64> = [2.0, 1.0, 1.0, 3.0].iter().map(|&v| Complex64::new(v, 0.0)).collect();
        assert!((complex_det(&mut m, 2) - Complex64::new(5.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn cholesky_factor() {
        let m = [4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&m, 2).unwrap();
        let llt = matmul(&l, &transpose(&l, 2), 2);
        for (a, b) in llt.iter().zip(&m) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}

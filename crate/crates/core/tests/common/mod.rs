use num_complex::Complex64;
use ocs_core::constructions::{EllipticCurveSpec, MapKind, Weierstrass};

/// Distinct solutions of `f(z) = target` in a fundamental cell by multistart Newton.
pub fn count_preimages(kind: MapKind, target: Complex64) -> usize {
    let spec = EllipticCurveSpec::default();
    let w = Weierstrass::new(&spec).unwrap();
    let f = |z: Complex64| -> Option<(Complex64, Complex64)> {
        let (p, dp) = w.eval(z).ok()?;
        Some(match kind {
            MapKind::P => (p, dp),
            MapKind::PPrime => (dp, w.p_second(p)),
            MapKind::PSquared => (p * p, p * dp * 2.0),
        })
    };
    let (w1, w2) = (spec.omega1(), spec.omega2());
    let mut roots: Vec<Complex64> = Vec::new();
    let m = 24;
    for a in 0..m {
        for b in 0..m {
            let mut z = w1 * ((a as f64 + 0.37) / m as f64 - 0.5) + w2 * ((b as f64 + 0.61) / m as f64 - 0.5);
            let mut ok = false;
            for _ in 0..60 {
                let Some((v, dv)) = f(z) else { break };
                let step = (v - target) / dv;
                if !step.is_finite() {
                    break;
                }
                z = w.reduce(z - step);
                if step.norm() < 1e-13 {
                    ok = true;
                    break;
                }
            }
            if ok && roots.iter().all(|r| (w.reduce(*r - z)).norm() > 1e-6) {
                roots.push(z);
            }
        }
    }
    roots.len()
}

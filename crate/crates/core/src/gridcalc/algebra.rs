//! Index gymnastics on grid fields.

use super::field::{Slot, TensorField};
use crate::error::{Error, Result};
use crate::linalg;

/// Pointwise inverse of a `(lower, lower)` metric, returned as `(upper, upper)`.
pub fn inverse_metric(g: &TensorField) -> Result<TensorField> {
    if g.variance() != [Slot::Lower, Slot::Lower] {
        return Err(Error::Variance("metric must be (lower, lower)".into()));
    }
    let n = g.dim();
    let mut failure = None;
    let out = g.map_points(vec![Slot::Upper, Slot::Upper], |_, m, o| match linalg::invert(m, n) {
        Some((inv, _)) => o.copy_from_slice(&inv),
        None => o.fill(f64::NAN),
    });
    for p in 0..g.num_points() {
        if out.at(p)[0].is_nan() {
            let det = nalgebra::DMatrix::from_row_slice(n, n, g.at(p)).determinant();
            failure = Some(Error::SingularMetric { point: g.chart().grid_index(p), det });
            break;
        }
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Contract slot `i` against slot `j` (one upper, one lower).
pub fn contract(field: &TensorField, i: usize, j: usize) -> Result<TensorField> {
    let r = field.rank();
    if i >= r || j >= r || i == j {
        return Err(Error::Variance(format!("cannot contract slots {i} and {j} of a rank-{r} field")));
    }
    if field.variance()[i] == field.variance()[j] {
        return Err(Error::Variance("contraction needs one upper and one lower slot".into()));
    }
    let n = field.dim();
    let variance: Vec<Slot> =
        field.variance().iter().enumerate().filter(|(s, _)| *s != i && *s != j).map(|(_, v)| *v).collect();
    let out_rank = r - 2;
    Ok(field.map_points(variance, |_, src, o| {
        for (oc, slot) in o.iter_mut().enumerate() {
            let rest = unflatten(oc, n, out_rank);
            let mut full = vec![0usize; r];
            let mut acc = 0.0;
            for d in 0..n {
                let mut it = rest.iter();
                for (s, f) in full.iter_mut().enumerate() {
                    *f = if s == i || s == j { d } else { *it.next().unwrap() };
                }
                acc += src[flatten(&full, n)];
            }
            *slot = acc;
        }
    }))
}

/// Apply `m` (row-major `n x n` per point) to slot `slot`:
/// `out[.. a ..] = sum_b m[a][b] src[.. b ..]`.
fn apply_to_slot(field: &TensorField, m: &TensorField, slot: usize, new: Slot) -> TensorField {
    let n = field.dim();
    let r = field.rank();
    let mut variance = field.variance().to_vec();
    variance[slot] = new;
    let stride = n.pow((r - 1 - slot) as u32);
    field.map_points(variance, |p, src, o| {
        let mat = m.at(p);
        for (oc, slot_val) in o.iter_mut().enumerate() {
            let a = (oc / stride) % n;
            let base = oc - a * stride;
            let mut acc = 0.0;
            for b in 0..n {
                acc += mat[a * n + b] * src[base + b * stride];
            }
            *slot_val = acc;
        }
    })
}

/// Raise slot `slot` with the metric `g` (inverted pointwise).
pub fn raise_index(field: &TensorField, g: &TensorField, slot: usize) -> Result<TensorField> {
    let ginv = inverse_metric(g)?;
    raise_with_inverse(field, &ginv, slot)
}

/// Raise slot `slot` with a precomputed inverse metric.
pub fn raise_with_inverse(field: &TensorField, ginv: &TensorField, slot: usize) -> Result<TensorField> {
    check_slot(field, slot, Slot::Lower)?;
    Ok(apply_to_slot(field, ginv, slot, Slot::Upper))
}

/// Lower slot `slot` with the metric `g`.
pub fn lower_index(field: &TensorField, g: &TensorField, slot: usize) -> Result<TensorField> {
    check_slot(field, slot, Slot::Upper)?;
    Ok(apply_to_slot(field, g, slot, Slot::Lower))
}

fn check_slot(field: &TensorField, slot: usize, expected: Slot) -> Result<()> {
    match field.variance().get(slot) {
        Some(v) if *v == expected => Ok(()),
        Some(v) => Err(Error::Variance(format!("slot {slot} is {v:?}, expected {expected:?}"))),
        None => Err(Error::Variance(format!("slot {slot} out of range for rank {}", field.rank()))),
    }
}

/// Pointwise tensor product; slots of `a` come first.
pub fn product(a: &TensorField, b: &TensorField) -> Result<TensorField> {
    if a.values().len() / a.ncomp().max(1) != b.values().len() / b.ncomp().max(1) {
        return Err(Error::Shape("fields live on different grids".into()));
    }
    let mut variance = a.variance().to_vec();
    variance.extend_from_slice(b.variance());
    let nb = b.ncomp();
    Ok(a.map_points(variance, |p, sa, o| {
        let sb = b.at(p);
        for (i, x) in sa.iter().enumerate() {
            for (j, y) in sb.iter().enumerate() {
                o[i * nb + j] = x * y;
            }
        }
    }))
}

pub(crate) fn flatten(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

pub(crate) fn unflatten(mut c: usize, n: usize, rank: usize) -> Vec<usize> {
    let mut idx = vec![0; rank];
    for s in (0..rank).rev() {
        idx[s] = c % n;
        c /= n;
    }
    idx
}

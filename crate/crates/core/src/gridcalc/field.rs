use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chart::FlatChart;
use crate::error::{Error, Result};

/// Position of a tensor slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slot {
    Upper,
    Lower,
}

/// Grid-sampled tensor components.
///
/// Values are stored point-major: the components at grid point `p` occupy
/// `values[p * ncomp .. (p + 1) * ncomp]`, with the component multi-index in
/// row-major order over `dim^rank`.
#[derive(Debug, Clone)]
pub struct TensorField {
    chart: Arc<FlatChart>,
    variance: Vec<Slot>,
    values: Vec<f64>,
    /// Exact first derivatives, one array per active axis, same layout as `values`.
    jet: Option<Vec<Vec<f64>>>,
}

impl TensorField {
    pub fn new(chart: Arc<FlatChart>, variance: Vec<Slot>, values: Vec<f64>) -> Result<Self> {
        let ncomp = chart.dim().pow(variance.len() as u32);
        let expected = chart.num_points() * ncomp;
        if values.len() != expected {
            return Err(Error::Shape(format!("expected {expected} values, got {}", values.len())));
        }
        check_finite("field", &chart, ncomp, &values)?;
        Ok(Self { chart, variance, values, jet: None })
    }

    /// Build without the finiteness scan; callers guarantee the invariant.
    pub(crate) fn from_parts(chart: Arc<FlatChart>, variance: Vec<Slot>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), chart.num_points() * chart.dim().pow(variance.len() as u32));
        Self { chart, variance, values, jet: None }
    }

    pub fn zeros(chart: Arc<FlatChart>, variance: Vec<Slot>) -> Self {
        let n = chart.num_points() * chart.dim().pow(variance.len() as u32);
        Self::from_parts(chart, variance, vec![0.0; n])
    }

    /// Same components at every grid point.
    pub fn constant(chart: Arc<FlatChart>, variance: Vec<Slot>, components: &[f64]) -> Result<Self> {
        let ncomp = chart.dim().pow(variance.len() as u32);
        if components.len() != ncomp {
            return Err(Error::Shape(format!("expected {ncomp} components, got {}", components.len())));
        }
        let values = components.repeat(chart.num_points());
        Self::new(chart, variance, values)
    }

    /// Sample `f` (lattice-fraction point -> components) at every grid point.
    pub fn sample<F>(chart: Arc<FlatChart>, variance: Vec<Slot>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Sync,
    {
        let values = sample_values(&chart, variance.len(), &f)?;
        Ok(Self::from_parts(chart, variance, values))
    }

    /// Sample `f` together with an exact derivative provider `df(point, axis)`.
    pub fn sample_with_jet<F, D>(chart: Arc<FlatChart>, variance: Vec<Slot>, f: F, df: D) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Sync,
        D: Fn(&[f64], usize) -> Vec<f64> + Sync,
    {
        let values = sample_values(&chart, variance.len(), &f)?;
        let jet = chart
            .active_axes()
            .to_vec()
            .into_iter()
            .map(|axis| sample_values(&chart, variance.len(), &|x: &[f64]| df(x, axis)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { chart, variance, values, jet: Some(jet) })
    }

    pub fn chart(&self) -> &Arc<FlatChart> {
        &self.chart
    }

    pub fn variance(&self) -> &[Slot] {
        &self.variance
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn ncomp(&self) -> usize {
        self.dim().pow(self.rank() as u32)
    }

    pub fn num_points(&self) -> usize {
        self.chart.num_points()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn jet(&self) -> Option<&[Vec<f64>]> {
        self.jet.as_deref()
    }

    pub fn without_jet(mut self) -> Self {
        self.jet = None;
        self
    }

    /// Components at grid point `p`.
    pub fn at(&self, p: usize) -> &[f64] {
        let n = self.ncomp();
        &self.values[p * n..(p + 1) * n]
    }

    /// Flat component index of a component multi-index.
    pub fn component_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim() + i)
    }

    /// Component `idx` at grid point `p`.
    pub fn get(&self, p: usize, idx: &[usize]) -> f64 {
        self.at(p)[self.component_index(idx)]
    }

    /// Pointwise map into a new field of the given variance.
    pub fn map_points<F>(&self, variance: Vec<Slot>, f: F) -> TensorField
    where
        F: Fn(usize, &[f64], &mut [f64]) + Sync,
    {
        let out_n = self.dim().pow(variance.len() as u32);
        let in_n = self.ncomp();
        let mut out = vec![0.0; self.num_points() * out_n];
        out.par_chunks_mut(out_n.max(1)).enumerate().for_each(|(p, o)| {
            f(p, &self.values[p * in_n..(p + 1) * in_n], o);
        });
        TensorField::from_parts(self.chart.clone(), variance, out)
    }

    /// Largest absolute component over the whole grid.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Componentwise `self - other`.
    pub fn sub(&self, other: &TensorField) -> Result<TensorField> {
        self.zip(other, |a, b| a - b)
    }

    /// Componentwise `self + other`.
    pub fn add(&self, other: &TensorField) -> Result<TensorField> {
        self.zip(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> TensorField {
        let values = self.values.iter().map(|v| v * s).collect();
        TensorField::from_parts(self.chart.clone(), self.variance.clone(), values)
    }

    fn zip(&self, other: &TensorField, f: impl Fn(f64, f64) -> f64) -> Result<TensorField> {
        if self.variance != other.variance || self.values.len() != other.values.len() {
            return Err(Error::Shape("fields differ in variance or grid".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        Ok(TensorField::from_parts(self.chart.clone(), self.variance.clone(), values))
    }

    /// Check that every component is finite, naming the first offending grid point.
    pub fn check_finite(&self, what: &str) -> Result<()> {
        check_finite(what, &self.chart, self.ncomp(), &self.values)
    }
}

fn sample_values(chart: &FlatChart, rank: usize, f: &(dyn Fn(&[f64]) -> Vec<f64> + Sync)) -> Result<Vec<f64>> {
    let ncomp = chart.dim().pow(rank as u32);
    let chunks: Vec<Result<Vec<f64>>> = (0..chart.num_points())
        .into_par_iter()
        .map(|p| {
            let x = chart.point(p);
            let v = f(&x);
            if v.len() != ncomp {
                return Err(Error::Shape(format!("sampler returned {} components, expected {ncomp}", v.len())));
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite { what: "sample".into(), point: chart.grid_index(p) });
            }
            Ok(v)
        })
        .collect();
    let mut values = Vec::with_capacity(chart.num_points() * ncomp);
    for c in chunks {
        values.extend(c?);
    }
    Ok(values)
}

fn check_finite(what: &str, chart: &FlatChart, ncomp: usize, values: &[f64]) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: what.into(), point: chart.grid_index(i / ncomp.max(1)) });
    }
    Ok(())
}

/// Evaluate `f` at every point in parallel, handing results to `sink` in
/// point order. Work proceeds in fixed-size blocks so transient memory stays
/// bounded on large grids.
pub fn for_each_point_blocked<T, F, S>(num_points: usize, f: F, mut sink: S) -> Result<()>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
    S: FnMut(usize, T) -> Result<()>,
{
    const BLOCK: usize = 2048;
    let mut start = 0;
    while start < num_points {
        let end = (start + BLOCK).min(num_points);
        let block: Vec<T> = (start..end).into_par_iter().map(&f).collect();
        for (off, v) in block.into_iter().enumerate() {
            sink(start + off, v)?;
        }
        start = end;
    }
    Ok(())
}

/// Pointwise statistics and L2 integral of a scalar field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarReport {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `int field^2 dV` over the full manifold, fiber volume included.
    pub l2_integral: f64,
}

impl ScalarReport {
    pub fn of(field: &TensorField) -> Result<Self> {
        if field.rank() != 0 {
            return Err(Error::Variance(format!("scalar report needs rank 0, got rank {}", field.rank())));
        }
        Ok(Self::of_values(field.values(), field.chart().volume()))
    }

    /// Report for raw grid samples on a domain of the given total volume.
    pub fn of_values(values: &[f64], volume: f64) -> Self {
        let n = values.len().max(1) as f64;
        let (mut min, mut max, mut sum, mut sq) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0.0);
        for &v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
            sq += v * v;
        }
        let mean = (sum / n).clamp(min, max);
        Self { min, max, mean, l2_integral: sq / n * volume }
    }

    /// Largest absolute pointwise value.
    pub fn max_abs(&self) -> f64 {
        self.min.abs().max(self.max.abs())
    }

    /// Root of the L2 integral.
    pub fn l2_norm(&self) -> f64 {
        self.l2_integral.sqrt()
    }
}

/// Uniform-grid quadrature: mean over grid points times total volume.
pub fn integrate(field: &TensorField) -> Result<f64> {
    if field.rank() != 0 {
        return Err(Error::Variance(format!("integrate needs a scalar field, got rank {}", field.rank())));
    }
    field.check_finite("integrand")?;
    let sum: f64 = field.values().iter().sum();
    Ok(sum / field.num_points() as f64 * field.chart().volume())
}

/// `∫ f dV_g`: grid mean of `f √det g` over the unit fraction cell.
pub fn integrate_dv(field: &TensorField, g: &TensorField) -> Result<f64> {
    if field.rank() != 0 {
        return Err(Error::Variance(format!("integrate needs a scalar field, got rank {}", field.rank())));
    }
    if g.rank() != 2 || g.num_points() != field.num_points() {
        return Err(Error::Shape("metric does not match the integrand grid".into()));
    }
    let n = g.dim();
    let sum: f64 = (0..field.num_points())
        .into_par_iter()
        .map(|p| {
            let det = crate::linalg::invert(g.at(p), n).map_or(0.0, |(_, d)| d);
            field.at(p)[0] * det.abs().sqrt()
        })
        .sum();
    Ok(sum / field.num_points() as f64)
}

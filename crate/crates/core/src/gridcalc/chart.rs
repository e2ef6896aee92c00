use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic coordinate chart `R^{2n} / Lambda` sampled on a uniform grid.
///
/// Coordinates are lattice fractions in `[0, 1)^{2n}`: a point `u` sits at
/// `B u` in Euclidean space, where the columns of `B` generate the lattice.
/// Fields vary only along `active_axes`; every other direction is a fiber
/// direction along which all fields are constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatChart {
    basis: DMatrix<f64>,
    active_axes: Vec<usize>,
    resolution: usize,
    /// Grid offset along active axes, in units of one grid cell.
    phase: f64,
    #[serde(skip)]
    metric: Option<DMatrix<f64>>,
}

impl FlatChart {
    pub fn new(basis: DMatrix<f64>, active_axes: Vec<usize>, resolution: usize) -> Result<Self> {
        let dim = basis.nrows();
        if basis.ncols() != dim || dim == 0 {
            return Err(Error::Shape(format!(
                "basis must be square, got {}x{}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        let det = basis.determinant();
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(Error::SingularBasis { det });
        }
        let mut axes = active_axes;
        axes.sort_unstable();
        axes.dedup();
        if let Some(&a) = axes.iter().find(|&&a| a >= dim) {
            return Err(Error::AxisOutOfRange { axis: a, dim });
        }
        if resolution < 8 {
            return Err(Error::BadResolution { resolution });
        }
        let metric = basis.transpose() * &basis;
        Ok(Self { basis, active_axes: axes, resolution, phase: 0.0, metric: Some(metric) })
    }

    /// Unit cube chart `[0,1)^dim` with identity basis.
    pub fn unit(dim: usize, active_axes: Vec<usize>, resolution: usize) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim), active_axes, resolution)
    }

    /// Shift the sampling grid by `phase` cells along every active axis.
    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn active_axes(&self) -> &[usize] {
        &self.active_axes
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Position of `axis` among the active axes, if it is active.
    pub fn active_position(&self, axis: usize) -> Option<usize> {
        self.active_axes.iter().position(|&a| a == axis)
    }

    /// Constant coordinate metric `g_ij = (B^T B)_ij`.
    pub fn coordinate_metric(&self) -> DMatrix<f64> {
        match &self.metric {
            Some(m) => m.clone(),
            None => self.basis.transpose() * &self.basis,
        }
    }

    /// Total volume `|det B|`.
    pub fn volume(&self) -> f64 {
        self.basis.determinant().abs()
    }

    /// Area (Gram volume) of the parallelotope spanned by the active basis columns.
    pub fn active_cell_volume(&self) -> f64 {
        if self.active_axes.is_empty() {
            return 1.0;
        }
        let cols: Vec<_> = self.active_axes.iter().map(|&a| self.basis.column(a).into_owned()).collect();
        let b = DMatrix::from_columns(&cols);
        (b.transpose() * b).determinant().abs().sqrt()
    }

    /// Volume of the inactive fiber: total volume over active cell volume.
    pub fn fiber_volume(&self) -> f64 {
        self.volume() / self.active_cell_volume()
    }

    pub fn num_points(&self) -> usize {
        self.resolution.pow(self.active_axes.len() as u32)
    }

    /// Multi-index over active axes (first active axis slowest).
    pub fn grid_index(&self, p: usize) -> Vec<usize> {
        let m = self.active_axes.len();
        let mut idx = vec![0; m];
        let mut rem = p;
        for s in (0..m).rev() {
            idx[s] = rem % self.resolution;
            rem /= self.resolution;
        }
        idx
    }

    /// Flat point index of a multi-index, wrapping periodically.
    pub fn flat_index(&self, multi: &[isize]) -> usize {
        let r = self.resolution as isize;
        multi.iter().fold(0usize, |acc, &i| acc * self.resolution + i.rem_euclid(r) as usize)
    }

    /// Lattice-fraction coordinates of grid point `p`; inactive coordinates are zero.
    pub fn point(&self, p: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for (s, k) in self.grid_index(p).into_iter().enumerate() {
            x[self.active_axes[s]] = (k as f64 + self.phase) / self.resolution as f64;
        }
        x
    }

    /// Euclidean position `B u` of grid point `p`.
    pub fn position(&self, p: usize) -> Vec<f64> {
        let u = nalgebra::DVector::from_vec(self.point(p));
        (&self.basis * u).iter().copied().collect()
    }

    /// Copy of the chart at another resolution.
    pub fn with_resolution(&self, resolution: usize) -> Result<Self> {
        let mut c = Self::new(self.basis.clone(), self.active_axes.clone(), resolution)?;
        c.phase = self.phase;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_chart_volume() {
        let c = FlatChart::unit(6, vec![0, 1], 16).unwrap();
        assert_eq!(c.num_points(), 256);
        assert!((c.volume() - 1.0).abs() < 1e-14);
        assert!((c.fiber_volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn grid_points_are_lattice_fractions() {
        let c = FlatChart::unit(4, vec![1, 3], 8).unwrap();
        let x = c.point(8 * 3 + 5);
        assert_eq!(x, vec![0.0, 3.0 / 8.0, 0.0, 5.0 / 8.0]);
        assert_eq!(c.flat_index(&[3, 5]), 29);
        assert_eq!(c.flat_index(&[-5, 13]), 29);
    }

    #[test]
    fn singular_basis_rejected() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(FlatChart::new(b, vec![0], 8), Err(Error::SingularBasis { .. })));
    }

    #[test]
    fn product_fiber_volume() {
        let mut b = DMatrix::identity(6, 6);
        b[(0, 0)] = 2.0;
        b[(1, 1)] = 3.0;
        b[(2, 2)] = 0.5;
        let c = FlatChart::new(b, vec![0, 1], 8).unwrap();
        assert!((c.volume() - 3.0).abs() < 1e-14);
        assert!((c.fiber_volume() - 0.5).abs() < 1e-14);
    }
}

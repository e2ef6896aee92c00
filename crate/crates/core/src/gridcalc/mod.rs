//! Periodic charts, grid-sampled tensor fields, spectral differentiation,
//! index gymnastics and quadrature.

pub mod algebra;
pub mod chart;
pub mod field;
pub mod io;
pub mod spectral;

pub use algebra::{contract, inverse_metric, lower_index, product, raise_index, raise_with_inverse};
pub use chart::FlatChart;
pub use field::{for_each_point_blocked, integrate, integrate_dv, ScalarReport, Slot, TensorField};
pub use spectral::{differentiate, differentiate_complex, differentiate_fd4, gradient};

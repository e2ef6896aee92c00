//! Hermitian geometry of orthogonal almost complex structures on periodic
//! grids: curvature, Chern torsion, k-Gauduchon quantities and the example
//! manifolds they are verified on.

pub mod constants;
pub mod constructions;
pub mod error;
pub mod gauduchon;
pub mod gridcalc;
pub mod hermitian;
pub mod jet;
pub mod linalg;
pub mod moduli;
pub mod riemann;

pub use error::{Error, Result};

use thiserror::Error;

/// Errors raised by the numerical pipeline.
///
/// Every numerical rejection names the module that raised it and, when the
/// failure is tied to a sample, the grid location.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value in {what} at grid point {point:?}")]
    NonFinite { what: String, point: Vec<usize> },

    #[error("spectral differentiation needs an even resolution, got {resolution}")]
    OddResolution { resolution: usize },

    #[error("resolution {resolution} is too small (need an even value >= 8)")]
    BadResolution { resolution: usize },

    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("singular metric at grid point {point:?} (|det| = {det:e})")]
    SingularMetric { point: Vec<usize>, det: f64 },

    #[error("singular lattice basis (|det| = {det:e})")]
    SingularBasis { det: f64 },

    #[error("variance mismatch: {0}")]
    Variance(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("eigensolve failed at grid point {point:?}")]
    Eigen { point: Vec<usize> },

    #[error("evaluation point within {distance:e} of a lattice pole")]
    PoleProximity { distance: f64 },

    #[error("vector is not unit length (|n| = {norm})")]
    NotUnit { norm: f64 },

    #[error("matrix is not orthogonal (residual {residual:e})")]
    NotOrthogonal { residual: f64 },

    #[error("almost complex structure check failed: {which} residual {residual:e} exceeds {tolerance:e}")]
    InvalidStructure { which: &'static str, residual: f64, tolerance: f64 },

    #[error("unitary frame is rank deficient at grid point {point:?}")]
    RankDeficient { point: Vec<usize> },

    #[error("k = {k} out of range 1..={max}")]
    KOutOfRange { k: usize, max: usize },

    #[error("matrix exponential overflow (norm {norm:e})")]
    ExpOverflow { norm: f64 },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}

impl Error {
    /// Name of the module family the error originates from, used in CLI diagnostics.
    pub fn module(&self) -> &'static str {
        match self {
            Error::NonFinite { .. }
            | Error::OddResolution { .. }
            | Error::BadResolution { .. }
            | Error::AxisOutOfRange { .. }
            | Error::Variance(_)
            | Error::Shape(_) => "gridcalc",
            Error::SingularMetric { .. } | Error::Eigen { .. } => "riemann",
            Error::InvalidStructure { .. } | Error::RankDeficient { .. } => "hermitian",
            Error::KOutOfRange { .. } => "gauduchon",
            Error::SingularBasis { .. }
            | Error::PoleProximity { .. }
            | Error::NotUnit { .. }
            | Error::NotOrthogonal { .. }
            | Error::InvalidSpec(_) => "constructions",
            Error::ExpOverflow { .. } => "moduli",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Configuration maps, their parameter spaces, and the algebra of quadratic ensembles.

mod catalog;
mod heisenberg;
mod lines;
mod quadratic;
mod space;

pub use catalog::{
    catalog, threshold_for, ConfigurationMap, MapKind, MapParams, Side, MAP_NAMES, SINGULAR_MARGIN,
};
pub use heisenberg::{heisenberg_phi, HeisPoint};
pub use lines::{
    line_line_distance, line_point_distance, phi_line_point_smooth, Line, PARALLEL_COS,
};
pub use quadratic::{
    alp_max_k, build_quadratic_ensemble, ensemble_nonsingularity_check, radon_hurwitz,
    radon_hurwitz_int, NonsingularityReport, QuadraticEnsemble, SINGULAR_DET,
};
pub use space::{sample_parameter_space, ParameterBox, Space};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("configuration is singular for this map")]
    SingularConfiguration,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no nonsingular ensemble of {k} forms on R^{d} (maximum {max_k})")]
    MaxKExceeded { d: usize, k: usize, max_k: usize },
    #[error("no construction implemented for an ensemble of {k} forms on R^{d}")]
    Unsupported { d: usize, k: usize },
    #[error("unknown configuration map: {0}")]
    UnknownMap(String),
    #[error("map {0} is cataloged for its threshold only and cannot be evaluated")]
    NotEvaluable(String),
}

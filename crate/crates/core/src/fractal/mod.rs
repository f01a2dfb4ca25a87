//! Probability measures of prescribed dimension: self-similar IFS measures,
//! single-stage Falconer lattice sets, simple reference measures and products.

mod frostman;
mod ifs;
mod lattice;
mod sampled;

pub use frostman::{
    frostman_check, frostman_check_with, geometric_grid, FrostmanReport, DEFAULT_CENTERS,
    MIN_POINTS_PER_BALL,
};
pub use ifs::{cylinder_measure, ifs_with_dimension, sample_ifs, IfsSpec, MAX_CYLINDERS};
pub use lattice::falconer_lattice_set;
pub use sampled::{
    chart_pushforward, equispaced_circle, midpoint_grid, point_mass, product_measure, uniform_box,
    uniform_on_space, uniform_sphere, MeasureMeta, SampledMeasure,
};

pub(crate) use frostman::{ball_profiles, validate_radii};
pub(crate) use sampled::pick as pick_index;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FractalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("infeasible packing: {0}")]
    InfeasiblePacking(String),
    #[error("radius {radius:.3e} captures only {mean_points:.1} points on average (need >= 10)")]
    InsufficientResolution { radius: f64, mean_points: f64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

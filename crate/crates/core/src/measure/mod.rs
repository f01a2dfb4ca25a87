//! Mollified configuration densities `nu^eps`, ball masses, scaling fits and interval detection.

mod density;
mod grid;
mod intervals;
mod mass;
mod mollifier;
mod pairs;

pub use density::{estimate_density, DensityEstimate, DensitySidecar};
pub use grid::{GridSpec, MAX_GRID_NODES};
pub use intervals::{default_delta, detect_intervals, Region};
pub use mass::{ball_mass, covering_mass_identity, fit_scaling_exponent, ScalingFit};
pub use mollifier::{profile_constant, Mollifier};
pub use pairs::{PairSample, BATCHES, MIN_PAIR_BUDGET};

use thiserror::Error;

use crate::fractal::SampledMeasure;
use crate::geometry::GeometryError;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{which}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        which: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("pair budget {budget} below the minimum {min}")]
    BudgetTooSmall { budget: usize, min: usize },
    #[error("grid step {step} exceeds eps/2 for eps = {eps}")]
    ResolutionConflict { step: f64, eps: f64 },
    #[error("eps = {eps} does not exceed the positional error {error:.3e} of {which}")]
    BelowPositionalError {
        which: &'static str,
        eps: f64,
        error: f64,
    },
    #[error("grid of {nodes} nodes exceeds the limit of {max}")]
    GridTooLarge { nodes: usize, max: usize },
    #[error("ball mass vanishes at eps = {eps}; cannot fit a scaling exponent")]
    DegenerateFit { eps: f64 },
    #[error("every sampled pair lies in the singular set")]
    NoValidPairs,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Analysis scales must exceed the positional error of both clouds.
pub(crate) fn check_resolution<T: Real>(
    eps: f64,
    mu1: &SampledMeasure<T>,
    mu2: &SampledMeasure<T>,
) -> Result<(), MeasureError> {
    for (which, mu) in [("mu1", mu1), ("mu2", mu2)] {
        let error = mu.positional_error();
        if error > 0.0 && eps <= error {
            return Err(MeasureError::BelowPositionalError { which, eps, error });
        }
    }
    Ok(())
}

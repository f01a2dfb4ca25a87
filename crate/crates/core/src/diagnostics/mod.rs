//! Checks of the measure hypotheses: s-energy, local dimension and Fourier decay.

mod decay;
mod dimension;
mod energy;

pub use decay::{fourier_decay, fourier_modulus, DecayFit, DECAY_OCTAVES, DECAY_RADII};
pub use dimension::local_dimension;
pub use energy::{
    classify_energy, energy_integral, energy_report, EnergyReport, EnergyVerdict, CONVERGED_BELOW,
    DIVERGING_ABOVE,
};

use thiserror::Error;

use crate::fractal::FractalError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Fractal(#[from] FractalError),
    #[error("every pair falls under the self-distance guard")]
    AllPairsDegenerate,
    #[error("xi_max = {xi_max} reaches the aliasing limit {limit:.3e}")]
    AliasLimit { xi_max: f64, limit: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

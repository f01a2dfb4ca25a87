//! Numerical laboratory for two-point configuration sets of fractal measures.
//!
//! The crate builds probability measures of prescribed dimension, evaluates
//! configuration maps `Phi: X x Y -> R^k` (distances, differences, point-line and
//! line-line distances, quadratic ensembles, Heisenberg and moment-curve maps),
//! and estimates the pushforward density of `mu1 x mu2` under `Phi` by mollified
//! Monte Carlo sums. Everything numeric is generic over [`Real`] (`f32`/`f64`);
//! cataloged smoothing orders and dimension thresholds are exact rationals.
//!
//! All randomness is addressed by `(seed, stream, draw index)`, so results are
//! reproducible bit for bit regardless of the size of the rayon thread pool.

// `!(x > 0.0)` guards deliberately reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod fractal;
pub mod geometry;
pub mod linalg;
pub mod measure;
pub mod rng;
mod scalar;

pub use num_rational::Rational64;
pub use scalar::Real;

pub use diagnostics::{
    energy_integral, energy_report, fourier_decay, local_dimension, DecayFit, EnergyReport,
    EnergyVerdict,
};
pub use fractal::{
    falconer_lattice_set, frostman_check, ifs_with_dimension, product_measure, sample_ifs, IfsSpec,
    SampledMeasure,
};
pub use geometry::{
    line_line_distance, line_point_distance, threshold_for, ConfigurationMap, HeisPoint, Line,
    MapKind, QuadraticEnsemble, Side, Space,
};
pub use measure::{
    ball_mass, covering_mass_identity, detect_intervals, estimate_density, fit_scaling_exponent,
    DensityEstimate, GridSpec, Mollifier, PairSample,
};

/// Double-precision instantiations.
pub type ConfigurationMap64 = ConfigurationMap<f64>;
pub type Line64 = Line<f64>;
pub type HeisPoint64 = HeisPoint<f64>;
pub type QuadraticEnsemble64 = QuadraticEnsemble<f64>;
pub type IfsSpec64 = IfsSpec<f64>;
pub type SampledMeasure64 = SampledMeasure<f64>;
pub type DensityEstimate64 = DensityEstimate<f64>;
pub type Mollifier64 = Mollifier<f64>;

/// Single-precision instantiations.
pub type ConfigurationMap32 = ConfigurationMap<f32>;
pub type SampledMeasure32 = SampledMeasure<f32>;
pub type DensityEstimate32 = DensityEstimate<f32>;

//! Fourier decay exponent of a sampled measure.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DiagnosticsError;
use crate::fractal::SampledMeasure;
use crate::linalg::fit_line;
use crate::rng::{counter_rng, streams, unit_sphere};
use crate::scalar::Real;

/// Radii in the geometric `|xi|` grid.
pub const DECAY_RADII: usize = 24;
/// Sub-samples of each envelope window.
pub const WINDOW_SAMPLES: usize = 16;
/// The grid spans `xi_max / 2^DECAY_OCTAVES ..= xi_max`.
pub const DECAY_OCTAVES: i32 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `-slope` of `log envelope` against `log |xi|` over the upper half of the grid.
    pub exponent: f64,
    pub rms_residual: f64,
    pub xi: Vec<f64>,
    /// Largest `|mu^(xi)|` over directions and the oscillation window at each radius.
    pub envelope: Vec<f64>,
    pub directions: usize,
    /// Largest modulus seen anywhere; never above 1 for a probability measure.
    pub max_modulus: f64,
}

/// `|sum_i w_i exp(-i xi . x_i)|`.
pub fn fourier_modulus<T: Real>(mu: &SampledMeasure<T>, xi: &[f64]) -> f64 {
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for (p, w) in mu.points().zip(mu.weights()) {
        let phase: f64 = p.iter().zip(xi).map(|(x, k)| x.to_f64_lossy() * k).sum();
        let (s, c) = phase.sin_cos();
        let w = w.to_f64_lossy();
        re += w * c;
        im -= w * s;
    }
    re.hypot(im)
}

/// Fits the decay rate of `|mu^|` along `n_directions` directions (the coordinate
/// axes first, then uniformly random ones).
///
/// At each radius `R` the envelope is the maximum of `|mu^(r omega)|` over directions
/// and over `r` in `[R, R + 2 pi / D]`, `D` the diameter of the bounding box, which
/// covers one oscillation period and so skips the zeros of the transform.
pub fn fourier_decay<T: Real>(
    mu: &SampledMeasure<T>,
    xi_max: f64,
    n_directions: usize,
    seed: u64,
) -> Result<DecayFit, DiagnosticsError> {
    if n_directions < 8 {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "need at least 8 directions, got {n_directions}"
        )));
    }
    let err = mu.positional_error();
    if err > 0.0 && xi_max >= 0.5 / err {
        return Err(DiagnosticsError::AliasLimit {
            xi_max,
            limit: 0.5 / err,
        });
    }
    if !(xi_max > 0.0 && xi_max.is_finite()) {
        return Err(DiagnosticsError::InvalidArgument(
            "xi_max must be positive".into(),
        ));
    }
    let d = mu.dim();
    let mut dirs: Vec<Vec<f64>> = (0..d.min(n_directions))
        .map(|j| {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            e
        })
        .collect();
    for i in dirs.len()..n_directions {
        let mut rng = counter_rng(seed, streams::DIRECTIONS, i as u64 * 64);
        dirs.push(unit_sphere(&mut rng, d));
    }
    let (lo, hi) = mu.bounds();
    let diam = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| (b.to_f64_lossy() - a.to_f64_lossy()).powi(2))
        .sum::<f64>()
        .sqrt()
        .max(1e-12);
    let window = TAU / diam;
    let xi_min = xi_max * 0.5f64.powi(DECAY_OCTAVES);
    let q = (xi_max / xi_min).powf(1.0 / (DECAY_RADII - 1) as f64);
    let xi: Vec<f64> = (0..DECAY_RADII)
        .map(|i| xi_min * q.powi(i as i32))
        .collect();

    // projections x_i . omega, computed once per direction
    let weights: Vec<f64> = mu.weights().iter().map(|w| w.to_f64_lossy()).collect();
    let proj: Vec<Vec<f64>> = dirs
        .par_iter()
        .map(|w| {
            mu.points()
                .map(|p| p.iter().zip(w).map(|(x, c)| x.to_f64_lossy() * c).sum())
                .collect()
        })
        .collect();
    let dstep = window / (WINDOW_SAMPLES - 1) as f64;
    let envelope: Vec<f64> = (0..DECAY_RADII * dirs.len())
        .into_par_iter()
        .map(|task| {
            let (r, dir) = (task / dirs.len(), task % dirs.len());
            window_max(&proj[dir], &weights, xi[r], dstep)
        })
        .collect::<Vec<_>>()
        .chunks_exact(dirs.len())
        .map(|c| c.iter().copied().fold(0.0, f64::max))
        .collect();
    let max_modulus = envelope.iter().copied().fold(0.0, f64::max);
    let half = DECAY_RADII / 2;
    let x: Vec<f64> = xi[half..].iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = envelope[half..]
        .iter()
        .map(|v| v.max(1e-300).ln())
        .collect();
    let fit = fit_line(&x, &y).expect("distinct radii");
    Ok(DecayFit {
        exponent: -fit.slope,
        rms_residual: fit.rms_residual,
        xi,
        envelope,
        directions: dirs.len(),
        max_modulus,
    })
}

/// `max_j |sum_i w_i exp(-i (r0 + j dr) phi_i)|` over the window samples, stepping the
/// phase by a rotation so each point costs two `sin_cos` calls.
fn window_max(phi: &[f64], w: &[f64], r0: f64, dr: f64) -> f64 {
    let mut re = [0.0f64; WINDOW_SAMPLES];
    let mut im = [0.0f64; WINDOW_SAMPLES];
    for (&p, &wi) in phi.iter().zip(w) {
        let (s0, c0) = (r0 * p).sin_cos();
        let (sd, cd) = (dr * p).sin_cos();
        // e^{-i theta}: (c, -s)
        let (mut c, mut s) = (c0, s0);
        for j in 0..WINDOW_SAMPLES {
            re[j] += wi * c;
            im[j] -= wi * s;
            (c, s) = (c * cd - s * sd, s * cd + c * sd);
        }
    }
    re.iter()
        .zip(&im)
        .map(|(a, b)| a.hypot(*b))
        .fold(0.0, f64::max)
}

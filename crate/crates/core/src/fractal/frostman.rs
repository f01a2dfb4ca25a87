//! Empirical ball masses `mu(B(x, rho))` and the Frostman growth check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampled::{pick, SampledMeasure};
use super::FractalError;
use crate::linalg::fit_line;
use crate::rng::{counter_rng, streams};
use crate::scalar::Real;

/// Minimum mean number of points the smallest ball must capture.
pub const MIN_POINTS_PER_BALL: f64 = 10.0;
pub const DEFAULT_CENTERS: usize = 200;

/// Points sorted along the first axis for windowed ball queries.
pub(crate) struct BallCounter {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl BallCounter {
    pub(crate) fn new<T: Real>(mu: &SampledMeasure<T>) -> Self {
        let dim = mu.dim();
        let mut order: Vec<usize> = (0..mu.len()).collect();
        order.sort_by(|&a, &b| mu.point(a)[0].partial_cmp(&mu.point(b)[0]).expect("finite"));
        let mut coords = Vec::with_capacity(mu.coords().len());
        let mut weights = Vec::with_capacity(mu.len());
        for i in order {
            coords.extend(mu.point(i).iter().map(|v| v.to_f64_lossy()));
            weights.push(mu.weight(i).to_f64_lossy());
        }
        Self {
            dim,
            coords,
            weights,
        }
    }

    /// Mass and point count of the open balls `B(center, rho)` for ascending `radii`.
    pub(crate) fn profile(&self, center: &[f64], radii: &[f64]) -> (Vec<f64>, Vec<usize>) {
        let rmax = *radii.last().expect("radii");
        let n = self.weights.len();
        let first = |i: usize| self.coords[i * self.dim];
        let lo = partition(n, |i| first(i) < center[0] - rmax);
        let hi = partition(n, |i| first(i) < center[0] + rmax);
        let mut mass = vec![0.0; radii.len()];
        let mut count = vec![0usize; radii.len()];
        for i in lo..hi {
            let p = &self.coords[i * self.dim..(i + 1) * self.dim];
            let d2: f64 = p.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
            let r = d2.sqrt();
            // smallest radius strictly larger than r
            let k = radii.partition_point(|&rho| rho <= r);
            if k < radii.len() {
                mass[k] += self.weights[i];
                count[k] += 1;
            }
        }
        for k in 1..radii.len() {
            mass[k] += mass[k - 1];
            count[k] += count[k - 1];
        }
        (mass, count)
    }
}

fn partition(n: usize, below: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if below(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Ball masses around `centers` points drawn from `mu` (by weight); row per center.
pub(crate) struct BallProfiles {
    pub masses: Vec<Vec<f64>>,
    pub mean_count_smallest: f64,
}

pub(crate) fn validate_radii(radii: &[f64]) -> Result<(), FractalError> {
    if radii.len() < 2 || radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(FractalError::InvalidArgument(
            "need at least two positive radii".into(),
        ));
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FractalError::InvalidArgument(
            "radii must be strictly increasing".into(),
        ));
    }
    if radii[radii.len() - 1] / radii[0] < 8.0 * (1.0 - 1e-12) {
        return Err(FractalError::InvalidArgument(
            "radii must span at least 3 octaves".into(),
        ));
    }
    Ok(())
}

pub(crate) fn ball_profiles<T: Real>(
    mu: &SampledMeasure<T>,
    radii: &[f64],
    centers: usize,
    seed: u64,
) -> Result<BallProfiles, FractalError> {
    validate_radii(radii)?;
    if centers == 0 {
        return Err(FractalError::InvalidArgument(
            "need at least one center".into(),
        ));
    }
    let counter = BallCounter::new(mu);
    let cumulative = mu.cumulative();
    let uniform = mu.has_uniform_weights();
    let rows: Vec<(Vec<f64>, usize)> = (0..centers as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = counter_rng(seed, streams::CENTERS, c);
            let i = pick(&mut rng, &cumulative, uniform);
            let x: Vec<f64> = mu.point(i).iter().map(|v| v.to_f64_lossy()).collect();
            let (mass, count) = counter.profile(&x, radii);
            (mass, count[0])
        })
        .collect();
    let mean_count_smallest = rows.iter().map(|r| r.1 as f64).sum::<f64>() / centers as f64;
    if mean_count_smallest < MIN_POINTS_PER_BALL {
        return Err(FractalError::InsufficientResolution {
            radius: radii[0],
            mean_points: mean_count_smallest,
        });
    }
    Ok(BallProfiles {
        masses: rows.into_iter().map(|r| r.0).collect(),
        mean_count_smallest,
    })
}

/// Outcome of [`frostman_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrostmanReport {
    pub s: f64,
    pub slope: f64,
    pub rms_residual: f64,
    pub pass: bool,
    pub centers: usize,
    pub mean_points_smallest_ball: f64,
}

/// Fits the slope of the center-averaged `log mu(B(x, rho))` against `log rho`;
/// passes iff the slope is at least `s - 0.1`.
///
/// Uses [`DEFAULT_CENTERS`] centers drawn from `mu` with the measure's own seed.
pub fn frostman_check<T: Real>(
    mu: &SampledMeasure<T>,
    s: f64,
    radii: &[f64],
) -> Result<FrostmanReport, FractalError> {
    frostman_check_with(mu, s, radii, DEFAULT_CENTERS, mu.meta().seed)
}

pub fn frostman_check_with<T: Real>(
    mu: &SampledMeasure<T>,
    s: f64,
    radii: &[f64],
    centers: usize,
    seed: u64,
) -> Result<FrostmanReport, FractalError> {
    if centers < 100 {
        return Err(FractalError::InvalidArgument(
            "need at least 100 centers".into(),
        ));
    }
    let prof = ball_profiles(mu, radii, centers, seed)?;
    let logr: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let mean_log: Vec<f64> = (0..radii.len())
        .map(|k| prof.masses.iter().map(|m| m[k].ln()).sum::<f64>() / centers as f64)
        .collect();
    let fit = fit_line(&logr, &mean_log)
        .ok_or_else(|| FractalError::InvalidArgument("degenerate radius grid".into()))?;
    Ok(FrostmanReport {
        s,
        slope: fit.slope,
        rms_residual: fit.rms_residual,
        pass: fit.slope >= s - 0.1,
        centers,
        mean_points_smallest_ball: prof.mean_count_smallest,
    })
}

/// `count` radii geometrically spaced from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    let q = (hi / lo).powf(1.0 / (count - 1) as f64);
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo * q.powi(i as i32)
            }
        })
        .collect()
}

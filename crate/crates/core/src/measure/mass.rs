use serde::{Deserialize, Serialize};

use super::pairs::PairSample;
use super::{check_resolution, MeasureError};
use crate::fractal::SampledMeasure;
use crate::geometry::ConfigurationMap;
use crate::linalg::fit_line;
use crate::scalar::Real;

/// `(mu1 x mu2)({|Phi(x, y) - t| < eps})` estimated from one pair sample.
pub fn ball_mass<T: Real>(
    map: &ConfigurationMap<T>,
    mu1: &SampledMeasure<T>,
    mu2: &SampledMeasure<T>,
    t: &[f64],
    eps: f64,
    pair_budget: usize,
    seed: u64,
) -> Result<f64, MeasureError> {
    if !(eps >= 0.0) {
        return Err(MeasureError::InvalidArgument(format!(
            "eps must be >= 0, got {eps}"
        )));
    }
    if eps > 0.0 {
        check_resolution(eps, mu1, mu2)?;
    }
    check_center(map, t)?;
    Ok(PairSample::draw(map, mu1, mu2, pair_budget, seed)?.ball_mass(t, eps))
}

fn check_center<T: Real>(map: &ConfigurationMap<T>, t: &[f64]) -> Result<(), MeasureError> {
    if t.len() != map.k() {
        return Err(MeasureError::DimensionMismatch {
            which: "t",
            expected: map.k(),
            found: t.len(),
        });
    }
    Ok(())
}

/// Least-squares fit of `log ball_mass` against `log eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub k: usize,
    pub t: Vec<f64>,
    pub eps: Vec<f64>,
    pub masses: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    /// Largest observed `ball_mass / eps^k`; an empirical value, not a bound on the true constant.
    pub c_phi_max: f64,
    /// Whether `slope >= k - 0.2`.
    pub meets_scaling_law: bool,
}

/// Fits the exponent of `eps -> ball_mass(t, eps)` over a geometric grid spanning
/// at least three octaves, reusing one pair sample for every `eps`.
pub fn fit_scaling_exponent<T: Real>(
    map: &ConfigurationMap<T>,
    mu1: &SampledMeasure<T>,
    mu2: &SampledMeasure<T>,
    t: &[f64],
    eps_grid: &[f64],
    pair_budget: usize,
    seed: u64,
) -> Result<ScalingFit, MeasureError> {
    crate::fractal::validate_radii(eps_grid)
        .map_err(|e| MeasureError::InvalidArgument(format!("eps grid: {e}")))?;
    check_resolution(eps_grid[0], mu1, mu2)?;
    check_center(map, t)?;
    let pairs = PairSample::draw(map, mu1, mu2, pair_budget, seed)?;
    scaling_from_pairs(&pairs, t, eps_grid)
}

pub(crate) fn scaling_from_pairs<T: Real>(
    pairs: &PairSample<T>,
    t: &[f64],
    eps_grid: &[f64],
) -> Result<ScalingFit, MeasureError> {
    let k = pairs.k();
    let masses: Vec<f64> = eps_grid.iter().map(|&e| pairs.ball_mass(t, e)).collect();
    if let Some(i) = masses.iter().position(|&m| m <= 0.0) {
        return Err(MeasureError::DegenerateFit { eps: eps_grid[i] });
    }
    let x: Vec<f64> = eps_grid.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = masses.iter().map(|m| m.ln()).collect();
    let fit = fit_line(&x, &y).ok_or(MeasureError::DegenerateFit { eps: eps_grid[0] })?;
    let c_phi_max = masses
        .iter()
        .zip(eps_grid)
        .map(|(m, e)| m / e.powi(k as i32))
        .fold(0.0, f64::max);
    Ok(ScalingFit {
        k,
        t: t.to_vec(),
        eps: eps_grid.to_vec(),
        masses,
        slope: fit.slope,
        intercept: fit.intercept,
        rms_residual: fit.rms_residual,
        c_phi_max,
        meets_scaling_law: fit.slope >= k as f64 - 0.2,
    })
}

/// `sum_j ball_mass(t_j, eps_j)` over a cover of the configuration range; at least
/// the covered mass, and close to 1 when the balls cover every observed value.
pub fn covering_mass_identity<T: Real>(
    map: &ConfigurationMap<T>,
    mu1: &SampledMeasure<T>,
    mu2: &SampledMeasure<T>,
    cover: &[(Vec<f64>, f64)],
    pair_budget: usize,
    seed: u64,
) -> Result<f64, MeasureError> {
    if cover.is_empty() {
        return Err(MeasureError::InvalidArgument(
            "cover must be nonempty".into(),
        ));
    }
    for (t, e) in cover {
        check_center(map, t)?;
        if !(*e >= 0.0) {
            return Err(MeasureError::InvalidArgument(format!(
                "radius {e} is negative"
            )));
        }
    }
    let pairs = PairSample::draw(map, mu1, mu2, pair_budget, seed)?;
    Ok(cover.iter().map(|(t, e)| pairs.ball_mass(t, *e)).sum())
}

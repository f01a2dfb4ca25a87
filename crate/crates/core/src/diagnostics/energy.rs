use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DiagnosticsError;
use crate::fractal::{cylinder_measure, pick_index, IfsSpec, SampledMeasure};
use crate::rng::{counter_rng, streams};
use crate::scalar::Real;

/// Relative change below which successive energy estimates count as converged.
pub const CONVERGED_BELOW: f64 = 0.05;
/// Relative growth per refinement that alone marks divergence.
pub const DIVERGING_ABOVE: f64 = 0.20;

/// `sum_{i != j} w_i w_j |x_i - x_j|^-s`.
///
/// Pairs closer than the measure's positional error (and coincident pairs) are
/// skipped. All ordered pairs are summed when `n (n - 1) <= pair_budget`; otherwise
/// `pair_budget` ordered pairs are drawn with probability `w_i w_j` and averaged.
pub fn energy_integral<T: Real>(
    mu: &SampledMeasure<T>,
    s: f64,
    pair_budget: usize,
    seed: u64,
) -> Result<f64, DiagnosticsError> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "s must be positive, got {s}"
        )));
    }
    if pair_budget == 0 {
        return Err(DiagnosticsError::InvalidArgument(
            "pair budget must be positive".into(),
        ));
    }
    let n = mu.len();
    let dim = mu.dim();
    let xs: Vec<f64> = mu.coords().iter().map(|v| v.to_f64_lossy()).collect();
    let ws: Vec<f64> = mu.weights().iter().map(|v| v.to_f64_lossy()).collect();
    let guard2 = mu.positional_error().powi(2);
    let kernel = |i: usize, j: usize| -> Option<f64> {
        let (a, b) = (&xs[i * dim..(i + 1) * dim], &xs[j * dim..(j + 1) * dim]);
        let r2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
        (r2 > 0.0 && r2 >= guard2).then(|| r2.powf(-0.5 * s))
    };
    let exhaustive = n
        .checked_mul(n.saturating_sub(1))
        .is_some_and(|p| p <= pair_budget);
    let (sum, hits) = if exhaustive {
        let rows: Vec<(f64, usize)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = 0.0;
                let mut hits = 0;
                for j in (0..n).filter(|&j| j != i) {
                    if let Some(k) = kernel(i, j) {
                        acc += ws[j] * k;
                        hits += 1;
                    }
                }
                (ws[i] * acc, hits)
            })
            .collect();
        rows.iter().fold((0.0, 0), |(s, h), &(a, b)| (s + a, h + b))
    } else {
        let cum = mu.cumulative();
        let uniform = mu.has_uniform_weights();
        const CHUNK: usize = 1 << 14;
        let chunks = pair_budget.div_ceil(CHUNK);
        let parts: Vec<(f64, usize)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let (start, end) = (c * CHUNK, ((c + 1) * CHUNK).min(pair_budget));
                let mut rng = counter_rng(seed, streams::ENERGY_PAIRS, 2 * start as u64);
                let mut acc = 0.0;
                let mut hits = 0;
                for _ in start..end {
                    let i = pick_index(&mut rng, &cum, uniform);
                    let j = pick_index(&mut rng, &cum, uniform);
                    if i != j {
                        if let Some(k) = kernel(i, j) {
                            acc += k;
                            hits += 1;
                        }
                    }
                }
                (acc, hits)
            })
            .collect();
        let (acc, hits) = parts
            .iter()
            .fold((0.0, 0), |(s, h), &(a, b)| (s + a, h + b));
        (acc / pair_budget as f64, hits)
    };
    if hits == 0 {
        return Err(DiagnosticsError::AllPairsDegenerate);
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyVerdict {
    Converged,
    Diverging,
    Inconclusive,
}

/// Energy of the depth-`j` discretizations of a self-similar measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub s: f64,
    pub depths: Vec<u32>,
    pub estimates: Vec<f64>,
    /// `(E_(j+1) - E_j) / E_j` for consecutive depths.
    pub relative_changes: Vec<f64>,
    pub verdict: EnergyVerdict,
}

/// Classifies a refinement sequence of energy estimates.
///
/// Converged: the last relative change is below 5%. Diverging: the estimates
/// increase strictly and either every relative change exceeds 20% or the absolute
/// increments never shrink. Anything else, or fewer than three estimates, is
/// inconclusive.
pub fn classify_energy(estimates: &[f64]) -> EnergyVerdict {
    if estimates.len() < 3 {
        return EnergyVerdict::Inconclusive;
    }
    let rel: Vec<f64> = estimates.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect();
    if rel.last().expect("two estimates").abs() < CONVERGED_BELOW {
        return EnergyVerdict::Converged;
    }
    let increments: Vec<f64> = estimates.windows(2).map(|w| w[1] - w[0]).collect();
    let increasing = increments.iter().all(|&d| d > 0.0);
    let fast = rel.iter().all(|&r| r > DIVERGING_ABOVE);
    let sustained = increments.windows(2).all(|w| w[1] >= w[0]);
    if increasing && (fast || sustained) {
        EnergyVerdict::Diverging
    } else {
        EnergyVerdict::Inconclusive
    }
}

/// Evaluates [`energy_integral`] on the exact cylinder discretization at each depth.
pub fn energy_report<T: Real>(
    spec: &IfsSpec<T>,
    s: f64,
    depths: &[u32],
    pair_budget: usize,
    seed: u64,
) -> Result<EnergyReport, DiagnosticsError> {
    if depths.windows(2).any(|w| w[0] >= w[1]) || depths.is_empty() {
        return Err(DiagnosticsError::InvalidArgument(
            "depths must be nonempty and strictly increasing".into(),
        ));
    }
    let estimates = depths
        .iter()
        .map(|&depth| {
            let mu = cylinder_measure(spec, depth)?;
            energy_integral(&mu, s, pair_budget, seed)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EnergyReport {
        s,
        depths: depths.to_vec(),
        relative_changes: estimates.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect(),
        verdict: classify_energy(&estimates),
        estimates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::MeasureMeta;

    #[test]
    fn two_atoms() {
        let mu = SampledMeasure::new(1, vec![0.0f64, 1.0], vec![0.5, 0.5], MeasureMeta::default())
            .unwrap();
        for s in [0.1, 0.5, 2.0] {
            assert!((energy_integral(&mu, s, 100, 0).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_pairs() {
        let mu = SampledMeasure::new(1, vec![0.3f64, 0.3], vec![0.5, 0.5], MeasureMeta::default())
            .unwrap();
        assert_eq!(
            energy_integral(&mu, 0.5, 100, 0),
            Err(DiagnosticsError::AllPairsDegenerate)
        );
        assert!(energy_integral(&mu, 0.0, 100, 0).is_err());
    }

    #[test]
    fn verdicts() {
        assert_eq!(classify_energy(&[1.0, 1.1, 1.12]), EnergyVerdict::Converged);
        assert_eq!(classify_energy(&[1.0, 1.3, 1.7]), EnergyVerdict::Diverging);
        assert_eq!(
            classify_energy(&[1.0, 1.15, 1.32, 1.50]),
            EnergyVerdict::Diverging
        );
        assert_eq!(
            classify_energy(&[1.0, 1.15, 1.25, 1.33]),
            EnergyVerdict::Inconclusive
        );
        assert_eq!(classify_energy(&[1.0, 1.01]), EnergyVerdict::Inconclusive);
    }
}

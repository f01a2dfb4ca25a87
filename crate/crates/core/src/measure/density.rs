use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use super::mollifier::Mollifier;
use super::pairs::PairSample;
use super::{check_resolution, MeasureError};
use crate::fractal::SampledMeasure;
use crate::geometry::ConfigurationMap;
use crate::scalar::Real;

/// Mollified configuration density on a regular grid, with batch standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate<T> {
    pub map: String,
    pub grid: GridSpec,
    /// Row-major over the grid, last axis fastest.
    pub values: Vec<T>,
    pub stderr: Vec<T>,
    pub eps: f64,
    pub pairs_used: usize,
    pub seed: u64,
}

/// Metadata written next to the CSV form of an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySidecar {
    pub map: String,
    pub eps: f64,
    pub pairs_used: usize,
    pub seed: u64,
    pub grid: GridSpec,
}

impl<T: Real> DensityEstimate<T> {
    pub fn k(&self) -> usize {
        self.grid.k()
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.to_f64_lossy())
            .fold(0.0, f64::max)
    }

    /// Riemann sum of the values over the grid.
    pub fn riemann_sum(&self) -> f64 {
        self.values.iter().map(|v| v.to_f64_lossy()).sum::<f64>() * self.grid.cell_volume()
    }

    /// Value at the grid node nearest to `t` (`None` outside the grid).
    pub fn value_near(&self, t: &[f64]) -> Option<f64> {
        let counts = self.grid.counts();
        let mut flat = 0usize;
        for (j, &x) in t.iter().enumerate() {
            let i = ((x - self.grid.lo[j]) / self.grid.step[j]).round();
            if i < 0.0 || i as usize >= counts[j] {
                return None;
            }
            flat = flat * counts[j] + i as usize;
        }
        Some(self.values[flat].to_f64_lossy())
    }

    pub fn sidecar(&self) -> DensitySidecar {
        DensitySidecar {
            map: self.map.clone(),
            eps: self.eps,
            pairs_used: self.pairs_used,
            seed: self.seed,
            grid: self.grid.clone(),
        }
    }

    /// CSV with header `t1[,t2..],value,stderr`, one row per node in grid order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let k = self.k();
        let mut header: Vec<String> = (1..=k).map(|j| format!("t{j}")).collect();
        header.push("value".into());
        header.push("stderr".into());
        writeln!(out, "{}", header.join(","))?;
        let counts = self.grid.counts();
        let mut idx = vec![0usize; k];
        let mut line = String::new();
        for (v, s) in self.values.iter().zip(&self.stderr) {
            line.clear();
            for (j, &i) in idx.iter().enumerate() {
                line.push_str(&format!("{},", self.grid.coord(j, i)));
            }
            line.push_str(&format!("{},{}", v.to_f64_lossy(), s.to_f64_lossy()));
            writeln!(out, "{line}")?;
            advance(&mut idx, &counts);
        }
        Ok(())
    }
}

/// Row-major odometer step (last axis fastest).
fn advance(idx: &mut [usize], counts: &[usize]) {
    for j in (0..idx.len()).rev() {
        idx[j] += 1;
        if idx[j] < counts[j] {
            return;
        }
        idx[j] = 0;
    }
}

impl<T: Real> PairSample<T> {
    /// `nu^eps(t) = sum_p w_p chi_eps(Phi_p - t) / sum_p w_p` on `grid` (auto when `None`).
    pub fn density(
        &self,
        eps: f64,
        grid: Option<&GridSpec>,
    ) -> Result<DensityEstimate<T>, MeasureError> {
        let k = self.k();
        let moll = Mollifier::new(k, T::lit(eps))?;
        let grid = match grid {
            Some(g) => {
                if g.k() != k {
                    return Err(MeasureError::DimensionMismatch {
                        which: "grid",
                        expected: k,
                        found: g.k(),
                    });
                }
                if g.max_step() > 0.5 * eps * (1.0 + 1e-12) {
                    return Err(MeasureError::ResolutionConflict {
                        step: g.max_step(),
                        eps,
                    });
                }
                g.clone()
            }
            None => {
                let (lo, hi) = self.observed_range().ok_or(MeasureError::NoValidPairs)?;
                GridSpec::auto(&lo, &hi, eps)?
            }
        };
        let counts = grid.counts();
        let nodes = grid.len();
        let sums: Vec<Vec<f64>> = self
            .batches()
            .par_iter()
            .map(|b| {
                let mut acc = vec![0.0f64; nodes];
                let mut first = vec![0usize; k];
                let mut last = vec![0usize; k];
                let mut idx = vec![0usize; k];
                'pairs: for (v, &w) in b.phi.chunks_exact(k).zip(&b.weight) {
                    for j in 0..k {
                        let x = v[j].to_f64_lossy();
                        let a = ((x - eps - grid.lo[j]) / grid.step[j]).ceil().max(0.0);
                        let z = ((x + eps - grid.lo[j]) / grid.step[j]).floor();
                        if z < 0.0 || a >= counts[j] as f64 {
                            continue 'pairs;
                        }
                        first[j] = a as usize;
                        last[j] = (z as usize).min(counts[j] - 1);
                        if first[j] > last[j] {
                            continue 'pairs;
                        }
                    }
                    idx.copy_from_slice(&first);
                    loop {
                        let mut r2 = T::zero();
                        let mut flat = 0usize;
                        for j in 0..k {
                            let u = v[j] - T::lit(grid.coord(j, idx[j]));
                            r2 = r2 + u * u;
                            flat = flat * counts[j] + idx[j];
                        }
                        acc[flat] += w * moll.at_sq(r2).to_f64_lossy();
                        // odometer over the box first..=last
                        let mut j = k;
                        loop {
                            if j == 0 {
                                continue 'pairs;
                            }
                            j -= 1;
                            if idx[j] < last[j] {
                                idx[j] += 1;
                                break;
                            }
                            idx[j] = first[j];
                        }
                    }
                }
                acc
            })
            .collect();

        let weights: Vec<f64> = self.batches().iter().map(|b| b.total_weight).collect();
        let total: f64 = weights.iter().sum();
        let live: Vec<usize> = (0..weights.len()).filter(|&b| weights[b] > 0.0).collect();
        let nb = live.len() as f64;
        let (values, stderr): (Vec<T>, Vec<T>) = (0..nodes)
            .into_par_iter()
            .map(|g| {
                let mut sum = 0.0;
                for s in &sums {
                    sum += s[g];
                }
                let value = (sum / total).max(0.0);
                let se = if live.len() < 2 {
                    0.0
                } else {
                    let est: Vec<f64> = live.iter().map(|&b| sums[b][g] / weights[b]).collect();
                    let mean = est.iter().sum::<f64>() / nb;
                    let var = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (nb - 1.0);
                    (var / nb).sqrt()
                };
                (T::lit(value), T::lit(se))
            })
            .unzip();
        Ok(DensityEstimate {
            map: self.map_label().to_string(),
            grid,
            values,
            stderr,
            eps,
            pairs_used: self.pairs_used(),
            seed: self.seed(),
        })
    }
}

/// Estimates `nu^eps` for the pushforward of `mu1 x mu2` under `map`.
///
/// `grid = None` selects the observed range padded by `3 eps` with step `eps / 2`.
pub fn estimate_density<T: Real>(
    map: &ConfigurationMap<T>,
    mu1: &SampledMeasure<T>,
    mu2: &SampledMeasure<T>,
    eps: f64,
    grid: Option<&GridSpec>,
    pair_budget: usize,
    seed: u64,
) -> Result<DensityEstimate<T>, MeasureError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(MeasureError::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    check_resolution(eps, mu1, mu2)?;
    if let Some(g) = grid {
        if g.max_step() > 0.5 * eps * (1.0 + 1e-12) {
            return Err(MeasureError::ResolutionConflict {
                step: g.max_step(),
                eps,
            });
        }
    }
    let pairs = PairSample::draw(map, mu1, mu2, pair_budget, seed)?;
    pairs.density(eps, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::point_mass;

    #[test]
    fn single_pair_traces_the_mollifier() {
        let map = ConfigurationMap::<f64>::distance(2);
        let a = point_mass(&[3.0, 4.0]);
        let b = point_mass(&[0.0, 0.0]);
        let grid = GridSpec::uniform(vec![4.8], vec![5.2], 0.01).unwrap();
        let est = estimate_density(&map, &a, &b, 0.1, Some(&grid), 10_000, 0).unwrap();
        let m = Mollifier::new(1, 0.1f64).unwrap();
        for (i, v) in est.values.iter().enumerate() {
            let t = grid.coord(0, i);
            assert!((v - m.eval(&[5.0 - t])).abs() < 1e-9);
        }
        assert!(est.stderr.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn rejects_coarse_grid() {
        let map = ConfigurationMap::<f64>::difference(1);
        let a = point_mass(&[0.0]);
        let grid = GridSpec::uniform(vec![-1.0], vec![1.0], 0.1).unwrap();
        assert!(matches!(
            estimate_density(&map, &a, &a, 0.1, Some(&grid), 10_000, 0),
            Err(MeasureError::ResolutionConflict { .. })
        ));
    }

    #[test]
    fn csv_layout() {
        let map = ConfigurationMap::<f64>::difference(2);
        let a = point_mass(&[0.0, 0.0]);
        let grid = GridSpec::uniform(vec![-0.1, -0.1], vec![0.1, 0.1], 0.05).unwrap();
        let est = estimate_density(&map, &a, &a, 0.1, Some(&grid), 10_000, 0).unwrap();
        let mut buf = Vec::new();
        est.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t1,t2,value,stderr");
        assert_eq!(lines.len(), 1 + 25);
        assert!(lines[2].starts_with("-0.1,-0.05,"));
    }
}

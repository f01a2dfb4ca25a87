//! Configuration values `Phi(x_i, y_j)` over enumerated or sampled pairs, split into batches.

use rayon::prelude::*;

use super::MeasureError;
use crate::fractal::SampledMeasure;
use crate::geometry::ConfigurationMap;
use crate::rng::{counter_rng, streams};
use crate::scalar::Real;

/// Number of disjoint pair batches behind every standard error.
pub const BATCHES: usize = 16;
pub const MIN_PAIR_BUDGET: usize = 10_000;

/// One batch of pairs: configuration values (row-major, `k` per pair) and pair weights.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Batch<T> {
    pub phi: Vec<T>,
    pub weight: Vec<f64>,
    /// Weight of every pair assigned to the batch, singular ones included.
    pub total_weight: f64,
}

/// Sample of `mu1 x mu2` pushed forward by a configuration map.
///
/// If `n1 * n2 <= budget` every pair is enumerated with weight `w_i w'_j` and pair
/// `p = i n2 + j` goes to batch `p mod 16`. Otherwise `budget` pairs are drawn
/// independently with probability `w_i w'_j`, pair `p` from draws `2p, 2p + 1` of the
/// pair stream, and batches are contiguous index ranges. Pairs in the singular set
/// keep their weight in the normalization but contribute nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSample<T> {
    k: usize,
    batches: Vec<Batch<T>>,
    pairs_used: usize,
    singular: usize,
    exhaustive: bool,
    seed: u64,
    map_label: String,
}

impl<T: Real> PairSample<T> {
    pub fn draw(
        map: &ConfigurationMap<T>,
        mu1: &SampledMeasure<T>,
        mu2: &SampledMeasure<T>,
        pair_budget: usize,
        seed: u64,
    ) -> Result<Self, MeasureError> {
        if !map.is_evaluable() {
            return Err(MeasureError::Geometry(
                crate::geometry::GeometryError::NotEvaluable(map.label()),
            ));
        }
        if mu1.dim() != map.x_coords() {
            return Err(MeasureError::DimensionMismatch {
                which: "mu1",
                expected: map.x_coords(),
                found: mu1.dim(),
            });
        }
        if mu2.dim() != map.y_coords() {
            return Err(MeasureError::DimensionMismatch {
                which: "mu2",
                expected: map.y_coords(),
                found: mu2.dim(),
            });
        }
        if pair_budget < MIN_PAIR_BUDGET {
            return Err(MeasureError::BudgetTooSmall {
                budget: pair_budget,
                min: MIN_PAIR_BUDGET,
            });
        }
        let (n1, n2) = (mu1.len(), mu2.len());
        let k = map.k();
        let exhaustive = n1.checked_mul(n2).is_some_and(|n| n <= pair_budget);
        let batches: Vec<Batch<T>> = if exhaustive {
            let total = n1 * n2;
            (0..BATCHES)
                .into_par_iter()
                .map(|b| {
                    let mut batch = Batch::with_capacity(k, total / BATCHES + 1);
                    let mut out = vec![T::zero(); k];
                    for p in (b..total).step_by(BATCHES) {
                        let (i, j) = (p / n2, p % n2);
                        let w = mu1.weight(i).to_f64_lossy() * mu2.weight(j).to_f64_lossy();
                        batch.push(map, mu1.point(i), mu2.point(j), w, &mut out);
                    }
                    batch
                })
                .collect()
        } else {
            let (c1, c2) = (mu1.cumulative(), mu2.cumulative());
            let (u1, u2) = (mu1.has_uniform_weights(), mu2.has_uniform_weights());
            let w = 1.0 / pair_budget as f64;
            (0..BATCHES)
                .into_par_iter()
                .map(|b| {
                    let start = b * pair_budget / BATCHES;
                    let end = (b + 1) * pair_budget / BATCHES;
                    let mut batch = Batch::with_capacity(k, end - start);
                    let mut out = vec![T::zero(); k];
                    // one generator per batch, positioned at the batch's first pair
                    let mut rng = counter_rng(seed, streams::PAIRS, 2 * start as u64);
                    for _ in start..end {
                        let i = crate::fractal::pick_index(&mut rng, &c1, u1);
                        let j = crate::fractal::pick_index(&mut rng, &c2, u2);
                        batch.push(map, mu1.point(i), mu2.point(j), w, &mut out);
                    }
                    batch
                })
                .collect()
        };
        let pairs_used = if exhaustive { n1 * n2 } else { pair_budget };
        let valid: usize = batches.iter().map(|b| b.weight.len()).sum();
        Ok(Self {
            k,
            batches,
            pairs_used,
            singular: pairs_used - valid,
            exhaustive,
            seed,
            map_label: map.label(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn pairs_used(&self) -> usize {
        self.pairs_used
    }

    /// Pairs dropped because they fell in the singular set.
    pub fn singular_pairs(&self) -> usize {
        self.singular
    }

    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn map_label(&self) -> &str {
        &self.map_label
    }

    pub(crate) fn batches(&self) -> &[Batch<T>] {
        &self.batches
    }

    pub(crate) fn total_weight(&self) -> f64 {
        self.batches.iter().map(|b| b.total_weight).sum()
    }

    /// Per-axis minimum and maximum of the observed configuration values.
    pub fn observed_range(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut lo = vec![f64::INFINITY; self.k];
        let mut hi = vec![f64::NEG_INFINITY; self.k];
        let mut any = false;
        for b in &self.batches {
            for v in b.phi.chunks_exact(self.k) {
                any = true;
                for j in 0..self.k {
                    let x = v[j].to_f64_lossy();
                    lo[j] = lo[j].min(x);
                    hi[j] = hi[j].max(x);
                }
            }
        }
        any.then_some((lo, hi))
    }

    /// Weighted fraction of pairs with `|Phi - t| < eps` (strict).
    pub fn ball_mass(&self, t: &[f64], eps: f64) -> f64 {
        assert_eq!(t.len(), self.k, "center dimension");
        let e2 = eps * eps;
        let hit: f64 = self
            .batches
            .iter()
            .map(|b| {
                b.phi
                    .chunks_exact(self.k)
                    .zip(&b.weight)
                    .filter(|(v, _)| {
                        let r2: f64 = v
                            .iter()
                            .zip(t)
                            .map(|(&x, &c)| (x.to_f64_lossy() - c).powi(2))
                            .sum();
                        r2 < e2
                    })
                    .map(|(_, &w)| w)
                    .sum::<f64>()
            })
            .sum();
        (hit / self.total_weight()).clamp(0.0, 1.0)
    }
}

impl<T: Real> Batch<T> {
    fn with_capacity(k: usize, n: usize) -> Self {
        Self {
            phi: Vec::with_capacity(k * n),
            weight: Vec::with_capacity(n),
            total_weight: 0.0,
        }
    }

    #[inline]
    fn push(&mut self, map: &ConfigurationMap<T>, x: &[T], y: &[T], w: f64, out: &mut [T]) {
        self.total_weight += w;
        if map.eval_raw(x, y, out) {
            self.phi.extend_from_slice(out);
            self.weight.push(w);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::{point_mass, uniform_box};

    #[test]
    fn exhaustive_vs_sampled() {
        let map = ConfigurationMap::<f64>::difference(1);
        let a: SampledMeasure<f64> = uniform_box(1, 100, 0.0, 1.0, 1);
        let b: SampledMeasure<f64> = uniform_box(1, 100, 0.0, 1.0, 2);
        let full = PairSample::draw(&map, &a, &b, 10_000, 0).unwrap();
        assert!(full.is_exhaustive());
        assert_eq!(full.pairs_used(), 10_000);
        let a: SampledMeasure<f64> = uniform_box(1, 1000, 0.0, 1.0, 1);
        let s = PairSample::draw(&map, &a, &b, 20_000, 0).unwrap();
        assert!(!s.is_exhaustive());
        assert_eq!(s.pairs_used(), 20_000);
        assert!((s.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_pairs_are_dropped() {
        let map = ConfigurationMap::<f64>::distance(2);
        let a = point_mass(&[0.5, 0.5]);
        let s = PairSample::draw(&map, &a, &a, 10_000, 0).unwrap();
        assert_eq!(s.singular_pairs(), 1);
        assert_eq!(s.ball_mass(&[0.0], 1.0), 0.0);
    }

    #[test]
    fn preconditions() {
        let map = ConfigurationMap::<f64>::distance(2);
        let a = point_mass(&[0.5, 0.5]);
        let b = point_mass(&[0.5]);
        assert!(matches!(
            PairSample::draw(&map, &a, &a, 100, 0),
            Err(MeasureError::BudgetTooSmall { .. })
        ));
        assert!(matches!(
            PairSample::draw(&map, &a, &b, 10_000, 0),
            Err(MeasureError::DimensionMismatch { which: "mu2", .. })
        ));
    }
}

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::density::DensityEstimate;
use crate::scalar::Real;

/// Bounding box of a connected set of grid nodes where the density is confidently positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub nodes: usize,
}

impl Region {
    /// Extent along the first axis (the interval length when `k = 1`).
    pub fn length(&self) -> f64 {
        self.hi[0] - self.lo[0]
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }
}

/// Default threshold: 10% of the largest estimated value.
pub fn default_delta<T: Real>(est: &DensityEstimate<T>) -> f64 {
    0.1 * est.max_value()
}

/// Maximal axis-connected grid regions where `value - 2 stderr > delta`,
/// sorted by their lower corner.
pub fn detect_intervals<T: Real>(est: &DensityEstimate<T>, delta: f64) -> Vec<Region> {
    let grid = &est.grid;
    let k = grid.k();
    let counts = grid.counts();
    let n = est.values.len();
    let two = T::lit(2.0);
    let on: Vec<bool> = est
        .values
        .iter()
        .zip(&est.stderr)
        .map(|(&v, &s)| (v - two * s).to_f64_lossy() > delta)
        .collect();
    // row-major strides
    let mut stride = vec![1usize; k];
    for j in (0..k.saturating_sub(1)).rev() {
        stride[j] = stride[j + 1] * counts[j + 1];
    }
    let mut seen = vec![false; n];
    let mut regions = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if !on[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut lo_idx = grid.unflatten(start);
        let mut hi_idx = lo_idx.clone();
        let mut size = 0;
        while let Some(g) = queue.pop_front() {
            size += 1;
            let idx = grid.unflatten(g);
            for j in 0..k {
                lo_idx[j] = lo_idx[j].min(idx[j]);
                hi_idx[j] = hi_idx[j].max(idx[j]);
                let mut visit = |h: usize| {
                    if on[h] && !seen[h] {
                        seen[h] = true;
                        queue.push_back(h);
                    }
                };
                if idx[j] > 0 {
                    visit(g - stride[j]);
                }
                if idx[j] + 1 < counts[j] {
                    visit(g + stride[j]);
                }
            }
        }
        regions.push(Region {
            lo: (0..k).map(|j| grid.coord(j, lo_idx[j])).collect(),
            hi: (0..k).map(|j| grid.coord(j, hi_idx[j])).collect(),
            nodes: size,
        });
    }
    regions.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("finite"));
    regions
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::GridSpec;

    fn estimate(grid: GridSpec, values: Vec<f64>) -> DensityEstimate<f64> {
        let n = values.len();
        DensityEstimate {
            map: "test".into(),
            grid,
            values,
            stderr: vec![0.0; n],
            eps: 1.0,
            pairs_used: 0,
            seed: 0,
        }
    }

    #[test]
    fn intervals_in_one_dimension() {
        let g = GridSpec::uniform(vec![0.0], vec![9.0], 1.0).unwrap();
        let est = estimate(g, vec![0.0, 1.0, 1.0, 0.0, 0.0, 2.0, 0.0, 1.0, 1.0, 1.0]);
        let r = detect_intervals(&est, 0.5);
        assert_eq!(r.len(), 3);
        assert_eq!((r[0].lo[0], r[0].hi[0]), (1.0, 2.0));
        assert_eq!((r[1].lo[0], r[1].hi[0]), (5.0, 5.0));
        assert_eq!((r[2].lo[0], r[2].hi[0], r[2].nodes), (7.0, 9.0, 3));
        let zero = estimate(
            GridSpec::uniform(vec![0.0], vec![9.0], 1.0).unwrap(),
            vec![0.0; 10],
        );
        assert!(detect_intervals(&zero, 0.0).is_empty());
    }

    #[test]
    fn stderr_lowers_the_bound() {
        let g = GridSpec::uniform(vec![0.0], vec![2.0], 1.0).unwrap();
        let mut est = estimate(g, vec![1.0, 1.0, 1.0]);
        est.stderr = vec![0.0, 0.3, 0.0];
        let r = detect_intervals(&est, 0.5);
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn boxes_in_two_dimensions() {
        let g = GridSpec::uniform(vec![0.0, 0.0], vec![2.0, 2.0], 1.0).unwrap();
        // L-shaped component plus an isolated corner; diagonal contact does not connect
        let est = estimate(g, vec![1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let r = detect_intervals(&est, 0.5);
        assert_eq!(r.len(), 2);
        assert_eq!(
            (r[0].lo.clone(), r[0].hi.clone(), r[0].nodes),
            (vec![0.0, 0.0], vec![1.0, 1.0], 3)
        );
        assert_eq!(r[1].lo, vec![2.0, 2.0]);
        assert_eq!(r[0].volume(), 1.0);
    }
}

use serde::{Deserialize, Serialize};

use super::MeasureError;

/// Upper bound on the number of grid nodes an estimate may allocate.
pub const MAX_GRID_NODES: usize = 1_000_000;

/// Regular lattice of `t` values: per axis `lo + i * step` for `i < count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub step: Vec<f64>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, step: Vec<f64>) -> Result<Self, MeasureError> {
        let k = lo.len();
        if k == 0 || hi.len() != k || step.len() != k {
            return Err(MeasureError::InvalidArgument("grid axes disagree".into()));
        }
        for j in 0..k {
            if !(step[j] > 0.0) || !(hi[j] >= lo[j]) || !lo[j].is_finite() || !hi[j].is_finite() {
                return Err(MeasureError::InvalidArgument(format!("bad grid axis {j}")));
            }
        }
        let g = Self { lo, hi, step };
        let nodes = g.len_checked();
        if nodes.is_none_or(|n| n > MAX_GRID_NODES) {
            return Err(MeasureError::GridTooLarge {
                nodes: nodes.unwrap_or(usize::MAX),
                max: MAX_GRID_NODES,
            });
        }
        Ok(g)
    }

    /// Same step on every axis.
    pub fn uniform(lo: Vec<f64>, hi: Vec<f64>, step: f64) -> Result<Self, MeasureError> {
        let k = lo.len();
        Self::new(lo, hi, vec![step; k])
    }

    /// Observed range padded by `3 eps`, step `eps / 2`.
    pub fn auto(observed_lo: &[f64], observed_hi: &[f64], eps: f64) -> Result<Self, MeasureError> {
        let lo = observed_lo.iter().map(|x| x - 3.0 * eps).collect();
        let hi = observed_hi.iter().map(|x| x + 3.0 * eps).collect();
        Self::uniform(lo, hi, 0.5 * eps)
    }

    pub fn k(&self) -> usize {
        self.lo.len()
    }

    pub fn count(&self, axis: usize) -> usize {
        ((self.hi[axis] - self.lo[axis]) / self.step[axis] + 1e-9).floor() as usize + 1
    }

    pub fn counts(&self) -> Vec<usize> {
        (0..self.k()).map(|j| self.count(j)).collect()
    }

    fn len_checked(&self) -> Option<usize> {
        (0..self.k()).try_fold(1usize, |acc, j| acc.checked_mul(self.count(j)))
    }

    pub fn len(&self) -> usize {
        self.len_checked().expect("validated grid")
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_step(&self) -> f64 {
        self.step.iter().copied().fold(0.0, f64::max)
    }

    /// Volume of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.step.iter().product()
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + i as f64 * self.step[axis]
    }

    /// Multi-index of a flat row-major node index (last axis fastest).
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let counts = self.counts();
        let mut idx = vec![0; self.k()];
        for j in (0..self.k()).rev() {
            idx[j] = flat % counts[j];
            flat /= counts[j];
        }
        idx
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .into_iter()
            .enumerate()
            .map(|(j, i)| self.coord(j, i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_nodes() {
        let g = GridSpec::uniform(vec![-1.0, 0.0], vec![1.0, 0.5], 0.25).unwrap();
        assert_eq!(g.counts(), vec![9, 3]);
        assert_eq!(g.len(), 27);
        assert_eq!(g.node(0), vec![-1.0, 0.0]);
        assert_eq!(g.node(1), vec![-1.0, 0.25]);
        assert_eq!(g.node(26), vec![1.0, 0.5]);
    }

    #[test]
    fn auto_grid() {
        let g = GridSpec::auto(&[-1.0], &[1.0], 0.01).unwrap();
        assert_eq!(g.step, vec![0.005]);
        assert!((g.lo[0] + 1.03).abs() < 1e-12);
        assert_eq!(g.count(0), 413);
    }

    #[test]
    fn rejects_huge_grids() {
        let r = GridSpec::uniform(vec![0.0; 3], vec![1.0; 3], 1e-3);
        assert!(matches!(r, Err(MeasureError::GridTooLarge { .. })));
    }
}

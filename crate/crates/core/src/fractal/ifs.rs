//! Self-similar iterated function systems `x -> r x + b_i` on the unit cube.

use rayon::prelude::*;

use super::sampled::{MeasureMeta, SampledMeasure};
use super::FractalError;
use crate::rng::{counter_rng, index_below, streams};
use crate::scalar::Real;

/// Largest number of cylinders [`cylinder_measure`] will enumerate.
pub const MAX_CYLINDERS: usize = 1 << 24;

/// Equal-ratio IFS `f_i(x) = r x + b_i` with images inside `[0, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct IfsSpec<T> {
    d: usize,
    ratio: T,
    offsets: Vec<Vec<T>>,
    dim: T,
}

impl<T: Real> IfsSpec<T> {
    /// Validates the open set condition: the images `r [0,1]^d + b_i` lie in the
    /// unit cube and have pairwise disjoint interiors.
    pub fn new(d: usize, ratio: T, offsets: Vec<Vec<T>>) -> Result<Self, FractalError> {
        let m = offsets.len();
        if d == 0 || m < 2 {
            return Err(FractalError::InvalidArgument(
                "need d >= 1 and at least two maps".into(),
            ));
        }
        if !(ratio > T::zero() && ratio < T::one()) {
            return Err(FractalError::InvalidArgument(format!(
                "ratio {ratio} outside (0, 1)"
            )));
        }
        let tol = T::invariant_tol();
        for b in &offsets {
            if b.len() != d {
                return Err(FractalError::DimensionMismatch {
                    expected: d,
                    found: b.len(),
                });
            }
            if b.iter().any(|&x| x < -tol || x + ratio > T::one() + tol) {
                return Err(FractalError::InfeasiblePacking(
                    "an image leaves the unit cube".into(),
                ));
            }
        }
        for i in 0..m {
            for j in i + 1..m {
                // interiors overlap iff every axis overlaps by more than the tolerance
                let overlap = offsets[i]
                    .iter()
                    .zip(&offsets[j])
                    .all(|(&a, &b)| (a - b).abs() < ratio - tol);
                if overlap {
                    return Err(FractalError::InfeasiblePacking(format!(
                        "images {i} and {j} overlap"
                    )));
                }
            }
        }
        let dim = T::from_usize_lossy(m).ln() / (T::one() / ratio).ln();
        if dim > T::from_usize_lossy(d) + tol {
            return Err(FractalError::InfeasiblePacking(format!(
                "similarity dimension {dim} exceeds {d}"
            )));
        }
        Ok(Self {
            d,
            ratio,
            offsets,
            dim,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.offsets.len()
    }

    pub fn ratio(&self) -> T {
        self.ratio
    }

    pub fn offsets(&self) -> &[Vec<T>] {
        &self.offsets
    }

    /// Similarity dimension `log m / log(1/r)`.
    pub fn dim(&self) -> T {
        self.dim
    }

    /// Half-diagonal of a depth-`depth` cylinder: distance from a cylinder center to its corners.
    pub fn cylinder_radius(&self, depth: u32) -> f64 {
        self.ratio.to_f64_lossy().powi(depth as i32) * 0.5 * (self.d as f64).sqrt()
    }

    /// `f_{i_0} o ... o f_{i_(depth-1)}` applied to the cube center.
    fn cylinder_center(&self, digits: impl DoubleEndedIterator<Item = usize>, out: &mut [T]) {
        let half = T::lit(0.5);
        out.iter_mut().for_each(|x| *x = half);
        for i in digits.rev() {
            for (x, &b) in out.iter_mut().zip(&self.offsets[i]) {
                *x = b + self.ratio * *x;
            }
        }
    }

    /// Whether `x` lies in the union of the depth-`depth` cylinder cubes.
    pub fn in_cover(&self, x: &[T], depth: u32) -> bool {
        let x: Vec<f64> = x.iter().map(|v| v.to_f64_lossy()).collect();
        self.in_cover_f64(&x, depth)
    }

    fn in_cover_f64(&self, x: &[f64], depth: u32) -> bool {
        const SLACK: f64 = 1e-9;
        let inside = |p: &[f64]| p.iter().all(|&v| (-SLACK..=1.0 + SLACK).contains(&v));
        if !inside(x) {
            return false;
        }
        if depth == 0 {
            return true;
        }
        let r = self.ratio.to_f64_lossy();
        self.offsets.iter().any(|b| {
            let y: Vec<f64> = x
                .iter()
                .zip(b)
                .map(|(&v, &o)| (v - o.to_f64_lossy()) / r)
                .collect();
            inside(&y) && self.in_cover_f64(&y, depth - 1)
        })
    }
}

/// IFS with `m` maps of common ratio `r = m^(-1/s)` and similarity dimension `s`.
///
/// Offsets sit on the `g^d` sub-cube corners, `g = ceil(m^(1/d))`, spaced `(1 - r)/(g - 1)`
/// apart and filled in lexicographic order.
pub fn ifs_with_dimension<T: Real>(d: usize, m: usize, s: f64) -> Result<IfsSpec<T>, FractalError> {
    if d == 0 || m < 2 {
        return Err(FractalError::InvalidArgument(
            "need d >= 1 and m >= 2".into(),
        ));
    }
    if !(s > 0.0 && s <= d as f64) {
        return Err(FractalError::InvalidArgument(format!(
            "dimension {s} outside (0, {d}]"
        )));
    }
    let r = (m as f64).powf(-1.0 / s);
    let mut g = 1usize;
    while g.pow(d as u32) < m {
        g += 1;
    }
    if g as f64 * r > 1.0 + 1e-12 {
        return Err(FractalError::InfeasiblePacking(format!(
            "{m} cubes of side {r:.4} do not fit in a {g}^{d} arrangement"
        )));
    }
    let step = (1.0 - r) / (g - 1) as f64;
    let offsets = (0..m)
        .map(|idx| {
            let mut rem = idx;
            let mut b = vec![T::zero(); d];
            for j in (0..d).rev() {
                b[j] = T::lit(step * (rem % g) as f64);
                rem /= g;
            }
            b
        })
        .collect();
    IfsSpec::new(d, T::lit(r), offsets)
}

/// `n` equal-weight cylinder centers of depth `depth` with independent uniform digits.
///
/// Point `i` uses draws `i * depth ..` of the digit stream, so the cloud does not
/// depend on how the work is split across threads.
pub fn sample_ifs<T: Real>(
    spec: &IfsSpec<T>,
    depth: u32,
    n: usize,
    seed: u64,
) -> Result<SampledMeasure<T>, FractalError> {
    if depth == 0 || n == 0 {
        return Err(FractalError::InvalidArgument(
            "depth and n must be >= 1".into(),
        ));
    }
    let (d, m) = (spec.d, spec.m());
    let coords: Vec<T> = (0..n as u64)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = counter_rng(seed, streams::IFS_DIGITS, i * u64::from(depth));
            let digits: Vec<usize> = (0..depth).map(|_| index_below(&mut rng, m)).collect();
            let mut p = vec![T::zero(); d];
            spec.cylinder_center(digits.into_iter(), &mut p);
            p
        })
        .collect();
    let mut meta = MeasureMeta::new(format!("ifs(d={d},m={m},s={:.6})", spec.dim), seed);
    meta.depth = Some(depth);
    meta.positional_error = spec.cylinder_radius(depth);
    SampledMeasure::uniform_weights(d, coords, meta)?
        .with_bounds(vec![T::zero(); d], vec![T::one(); d])
}

/// All `m^depth` cylinder centers with equal weights: the self-similar measure
/// discretized exactly at depth `depth`.
pub fn cylinder_measure<T: Real>(
    spec: &IfsSpec<T>,
    depth: u32,
) -> Result<SampledMeasure<T>, FractalError> {
    let (d, m) = (spec.d, spec.m());
    let n = (m as u64)
        .checked_pow(depth)
        .filter(|&n| n as usize <= MAX_CYLINDERS)
        .ok_or_else(|| {
            FractalError::InvalidArgument(format!(
                "{m}^{depth} cylinders exceed the enumeration cap"
            ))
        })? as usize;
    let coords: Vec<T> = (0..n)
        .into_par_iter()
        .flat_map_iter(|idx| {
            let mut rem = idx;
            let mut digits = vec![0usize; depth as usize];
            for slot in digits.iter_mut().rev() {
                *slot = rem % m;
                rem /= m;
            }
            let mut p = vec![T::zero(); d];
            spec.cylinder_center(digits.into_iter(), &mut p);
            p
        })
        .collect();
    let mut meta = MeasureMeta::new(format!("ifs_cylinders(d={d},m={m},s={:.6})", spec.dim), 0);
    meta.depth = Some(depth);
    meta.positional_error = spec.cylinder_radius(depth);
    SampledMeasure::uniform_weights(d, coords, meta)?
        .with_bounds(vec![T::zero(); d], vec![T::one(); d])
}

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FractalError;
use crate::geometry::{ParameterBox, Space};
use crate::rng::{counter_rng, index_below, streams, unit, unit_sphere};
use crate::scalar::Real;

/// Provenance of a sampled measure.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasureMeta {
    pub generator: String,
    pub seed: u64,
    pub depth: Option<u32>,
    /// Upper bound on the distance between a sample and the point of the
    /// underlying measure it stands for (zero for exact samplers).
    pub positional_error: f64,
}

impl MeasureMeta {
    pub fn new(generator: impl Into<String>, seed: u64) -> Self {
        Self {
            generator: generator.into(),
            seed,
            depth: None,
            positional_error: 0.0,
        }
    }
}

/// Weighted point cloud approximating a probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledMeasure<T> {
    dim: usize,
    coords: Vec<T>,
    weights: Vec<T>,
    lo: Vec<T>,
    hi: Vec<T>,
    meta: MeasureMeta,
}

fn compensated_sum<T: Real>(xs: &[T]) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for &x in xs {
        let x = x.to_f64_lossy();
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

impl<T: Real> SampledMeasure<T> {
    /// Builds a measure from flat row-major coordinates (`n * dim`) and weights.
    ///
    /// Weights must be nonnegative and sum to one within [`Real::invariant_tol`].
    /// The bounding box is the tight box of the points.
    pub fn new(
        dim: usize,
        coords: Vec<T>,
        weights: Vec<T>,
        meta: MeasureMeta,
    ) -> Result<Self, FractalError> {
        if dim == 0 {
            return Err(FractalError::InvalidArgument(
                "measure dimension must be >= 1".into(),
            ));
        }
        if weights.is_empty() || coords.len() != dim * weights.len() {
            return Err(FractalError::InvalidArgument(format!(
                "expected {} coordinates for {} weights in dimension {dim}, found {}",
                dim * weights.len(),
                weights.len(),
                coords.len()
            )));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(FractalError::InvalidArgument(
                "non-finite coordinate".into(),
            ));
        }
        if weights.iter().any(|&w| !(w >= T::zero()) || !w.is_finite()) {
            return Err(FractalError::InvalidArgument(
                "weights must be nonnegative".into(),
            ));
        }
        let total = compensated_sum(&weights);
        if (total - 1.0).abs() > T::invariant_tol().to_f64_lossy() {
            return Err(FractalError::InvalidArgument(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let mut lo = coords[..dim].to_vec();
        let mut hi = lo.clone();
        for p in coords.chunks_exact(dim) {
            for j in 0..dim {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        Ok(Self {
            dim,
            coords,
            weights,
            lo,
            hi,
            meta,
        })
    }

    /// Equal weights `1/n`.
    pub fn uniform_weights(
        dim: usize,
        coords: Vec<T>,
        meta: MeasureMeta,
    ) -> Result<Self, FractalError> {
        let n = coords.len() / dim.max(1);
        let w = T::one() / T::from_usize_lossy(n.max(1));
        Self::new(dim, coords, vec![w; n], meta)
    }

    /// Declares a bounding box, checking that every point lies inside it.
    pub fn with_bounds(mut self, lo: Vec<T>, hi: Vec<T>) -> Result<Self, FractalError> {
        if lo.len() != self.dim || hi.len() != self.dim {
            return Err(FractalError::InvalidArgument(
                "bounding box dimension".into(),
            ));
        }
        for j in 0..self.dim {
            if self.lo[j] < lo[j] || self.hi[j] > hi[j] {
                return Err(FractalError::InvalidArgument(format!(
                    "points leave the declared bounding box along axis {j}"
                )));
            }
        }
        self.lo = lo;
        self.hi = hi;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[T]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, i: usize) -> T {
        self.weights[i]
    }

    pub fn bounds(&self) -> (&[T], &[T]) {
        (&self.lo, &self.hi)
    }

    pub fn meta(&self) -> &MeasureMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut MeasureMeta {
        &mut self.meta
    }

    pub fn positional_error(&self) -> f64 {
        self.meta.positional_error
    }

    /// Whether all weights are equal.
    pub fn has_uniform_weights(&self) -> bool {
        let w0 = self.weights[0];
        self.weights.iter().all(|&w| w == w0)
    }

    /// Weighted mean.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (p, &w) in self.points().zip(&self.weights) {
            for (mj, &x) in m.iter_mut().zip(p) {
                *mj += w.to_f64_lossy() * x.to_f64_lossy();
            }
        }
        m
    }

    /// Cumulative weights for inverse-CDF index sampling.
    pub(crate) fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.weights
            .iter()
            .map(|w| {
                acc += w.to_f64_lossy();
                acc
            })
            .collect()
    }

    /// Writes the columnar text form: a `# d=.. n=.. seed=.. generator=..` header,
    /// then one `w x1 .. xd` row per point with 17 significant digits.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let generator: String = self
            .meta
            .generator
            .chars()
            .map(|c| if c.is_whitespace() { '_' } else { c })
            .collect();
        writeln!(
            out,
            "# d={} n={} seed={} generator={}",
            self.dim,
            self.len(),
            self.meta.seed,
            generator
        )?;
        let mut line = String::new();
        for (p, w) in self.points().zip(&self.weights) {
            line.clear();
            line.push_str(&format!("{:.16e}", w.to_f64_lossy()));
            for x in p {
                line.push(' ');
                line.push_str(&format!("{:.16e}", x.to_f64_lossy()));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Reads the form produced by [`SampledMeasure::write_text`].
    pub fn read_text<R: BufRead>(input: R) -> Result<Self, FractalError> {
        let mut lines = input.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| FractalError::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
        let header = header.map_err(|e| FractalError::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
        let body = header
            .strip_prefix('#')
            .ok_or_else(|| FractalError::Parse {
                line: 1,
                msg: "missing '#' header".into(),
            })?;
        let (mut d, mut n, mut seed, mut generator) = (None, None, 0u64, String::new());
        for tok in body.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| FractalError::Parse {
                line: 1,
                msg: format!("bad header token {tok}"),
            })?;
            let bad = |_| FractalError::Parse {
                line: 1,
                msg: format!("bad value for {k}"),
            };
            match k {
                "d" => d = Some(v.parse::<usize>().map_err(bad)?),
                "n" => n = Some(v.parse::<usize>().map_err(bad)?),
                "seed" => seed = v.parse::<u64>().map_err(bad)?,
                "generator" => generator = v.to_string(),
                _ => {}
            }
        }
        let d = d.ok_or_else(|| FractalError::Parse {
            line: 1,
            msg: "missing d".into(),
        })?;
        let n = n.ok_or_else(|| FractalError::Parse {
            line: 1,
            msg: "missing n".into(),
        })?;
        let mut coords = Vec::with_capacity(n * d);
        let mut weights = Vec::with_capacity(n);
        for (idx, line) in lines {
            let line = line.map_err(|e| FractalError::Parse {
                line: idx + 1,
                msg: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| FractalError::Parse {
                    line: idx + 1,
                    msg: e.to_string(),
                })?;
            if vals.len() != d + 1 {
                return Err(FractalError::Parse {
                    line: idx + 1,
                    msg: format!("expected {} columns, found {}", d + 1, vals.len()),
                });
            }
            weights.push(T::lit(vals[0]));
            coords.extend(vals[1..].iter().map(|&x| T::lit(x)));
        }
        if weights.len() != n {
            return Err(FractalError::Parse {
                line: 1,
                msg: format!("header declares {n} points, found {}", weights.len()),
            });
        }
        Self::new(d, coords, weights, MeasureMeta::new(generator, seed))
    }
}

/// Single atom at `x`.
pub fn point_mass<T: Real>(x: &[T]) -> SampledMeasure<T> {
    SampledMeasure::new(
        x.len(),
        x.to_vec(),
        vec![T::one()],
        MeasureMeta::new("atom", 0),
    )
    .expect("one unit atom")
}

/// `n` independent uniform points in `[lo, hi]^d`.
pub fn uniform_box<T: Real>(d: usize, n: usize, lo: f64, hi: f64, seed: u64) -> SampledMeasure<T> {
    let coords: Vec<T> = (0..n as u64)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = counter_rng(seed, streams::UNIFORM, i * d as u64);
            (0..d)
                .map(|_| T::lit(lo + (hi - lo) * unit(&mut rng)))
                .collect::<Vec<_>>()
        })
        .collect();
    let meta = MeasureMeta::new(format!("uniform[{lo},{hi}]^{d}"), seed);
    SampledMeasure::uniform_weights(d, coords, meta)
        .expect("uniform cloud")
        .with_bounds(vec![T::lit(lo); d], vec![T::lit(hi); d])
        .expect("points inside box")
}

/// Midpoints of the `per_axis^d` congruent cells of `[lo, hi]^d`, equal weights.
pub fn midpoint_grid<T: Real>(d: usize, per_axis: usize, lo: f64, hi: f64) -> SampledMeasure<T> {
    let n = per_axis.pow(d as u32);
    let h = (hi - lo) / per_axis as f64;
    let mut coords = Vec::with_capacity(n * d);
    for idx in 0..n {
        let mut rem = idx;
        let mut p = vec![T::zero(); d];
        for j in (0..d).rev() {
            p[j] = T::lit(lo + h * ((rem % per_axis) as f64 + 0.5));
            rem /= per_axis;
        }
        coords.extend(p);
    }
    let mut meta = MeasureMeta::new(format!("midpoint_grid[{lo},{hi}]^{d}"), 0);
    meta.positional_error = 0.5 * h * (d as f64).sqrt();
    SampledMeasure::uniform_weights(d, coords, meta).expect("grid")
}

/// `n` independent uniform points on the unit sphere of `R^d`.
pub fn uniform_sphere<T: Real>(d: usize, n: usize, seed: u64) -> SampledMeasure<T> {
    let coords: Vec<T> = (0..n as u64)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = counter_rng(seed, streams::SPHERE, i * 64);
            unit_sphere::<T>(&mut rng, d)
        })
        .collect();
    SampledMeasure::uniform_weights(
        d,
        coords,
        MeasureMeta::new(format!("sphere^{}", d - 1), seed),
    )
    .expect("sphere cloud")
}

/// `n` equally spaced points on the circle of radius `radius`, centered at the origin.
pub fn equispaced_circle<T: Real>(n: usize, radius: f64) -> SampledMeasure<T> {
    let mut coords = Vec::with_capacity(2 * n);
    for i in 0..n {
        let a = std::f64::consts::TAU * (i as f64 + 0.5) / n as f64;
        coords.push(T::lit(radius * a.cos()));
        coords.push(T::lit(radius * a.sin()));
    }
    let mut meta = MeasureMeta::new(format!("circle(r={radius})"), 0);
    meta.positional_error = std::f64::consts::PI * radius / n as f64;
    SampledMeasure::uniform_weights(2, coords, meta).expect("circle")
}

/// Uniform samples of a parameter space (lines, spheres, hyperplanes or points).
pub fn uniform_on_space<T: Real>(
    space: Space,
    n: usize,
    seed: u64,
    bounds: &ParameterBox,
) -> SampledMeasure<T> {
    let pts: Vec<Vec<T>> = space.sample_uniform(n, seed, bounds);
    let coords = pts.into_iter().flatten().collect();
    let meta = MeasureMeta::new(
        format!("uniform_{}({})", space.name(), space.ambient()),
        seed,
    );
    SampledMeasure::uniform_weights(space.coord_dim(), coords, meta).expect("parameter cloud")
}

/// Pushes a measure on the chart cube `[0, 1]^m` forward to parameter coordinates.
pub fn chart_pushforward<T: Real>(
    chart_measure: &SampledMeasure<T>,
    space: Space,
    bounds: &ParameterBox,
) -> Result<SampledMeasure<T>, FractalError> {
    if chart_measure.dim() != space.manifold_dim() {
        return Err(FractalError::DimensionMismatch {
            expected: space.manifold_dim(),
            found: chart_measure.dim(),
        });
    }
    let coords: Vec<T> = chart_measure
        .points()
        .flat_map(|u| space.chart(u, bounds))
        .collect();
    let mut meta = chart_measure.meta().clone();
    meta.generator = format!("{}@{}({})", meta.generator, space.name(), space.ambient());
    meta.positional_error *= space.chart_lipschitz(bounds);
    SampledMeasure::new(
        space.coord_dim(),
        coords,
        chart_measure.weights().to_vec(),
        meta,
    )
}

/// Product of two measures on `R^(da + db)`.
///
/// When `na * nb <= budget` the full product is formed (weights `w_i w'_j`);
/// otherwise `budget` independent pairs are drawn with probabilities `w_i w'_j`
/// and given equal weights.
pub fn product_measure<T: Real>(
    a: &SampledMeasure<T>,
    b: &SampledMeasure<T>,
    budget: usize,
    seed: u64,
) -> Result<SampledMeasure<T>, FractalError> {
    if budget == 0 {
        return Err(FractalError::InvalidArgument(
            "product budget must be positive".into(),
        ));
    }
    let (da, db) = (a.dim(), b.dim());
    let mut meta = MeasureMeta::new(
        format!("({})x({})", a.meta().generator, b.meta().generator),
        seed,
    );
    meta.positional_error = a.positional_error().hypot(b.positional_error());
    let full = a.len().checked_mul(b.len()).is_some_and(|n| n <= budget);
    let (coords, weights) = if full {
        let mut coords = Vec::with_capacity(a.len() * b.len() * (da + db));
        let mut weights = Vec::with_capacity(a.len() * b.len());
        for (pa, &wa) in a.points().zip(a.weights()) {
            for (pb, &wb) in b.points().zip(b.weights()) {
                coords.extend_from_slice(pa);
                coords.extend_from_slice(pb);
                weights.push(wa * wb);
            }
        }
        let total = T::lit(compensated_sum(&weights));
        let weights = weights.into_iter().map(|w| w / total).collect();
        (coords, weights)
    } else {
        let (ca, cb) = (a.cumulative(), b.cumulative());
        let uniform_a = a.has_uniform_weights();
        let uniform_b = b.has_uniform_weights();
        let coords: Vec<T> = (0..budget as u64)
            .into_par_iter()
            .flat_map_iter(|p| {
                let mut rng = counter_rng(seed, streams::PRODUCT, 2 * p);
                let i = pick(&mut rng, &ca, uniform_a);
                let j = pick(&mut rng, &cb, uniform_b);
                let mut v = a.point(i).to_vec();
                v.extend_from_slice(b.point(j));
                v
            })
            .collect();
        let w = T::one() / T::from_usize_lossy(budget);
        (coords, vec![w; budget])
    };
    let lo: Vec<T> = a.bounds().0.iter().chain(b.bounds().0).copied().collect();
    let hi: Vec<T> = a.bounds().1.iter().chain(b.bounds().1).copied().collect();
    SampledMeasure::new(da + db, coords, weights, meta)?.with_bounds(lo, hi)
}

/// Index drawn with probability proportional to the weights; one draw.
pub(crate) fn pick(rng: &mut rand_chacha::ChaCha8Rng, cumulative: &[f64], uniform: bool) -> usize {
    if uniform {
        return index_below(rng, cumulative.len());
    }
    let total = *cumulative.last().expect("nonempty");
    let u = unit(rng) * total;
    cumulative
        .partition_point(|&c| c <= u)
        .min(cumulative.len() - 1)
}

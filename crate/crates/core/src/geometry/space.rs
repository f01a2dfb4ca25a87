//! Parameter spaces of configuration maps, their coordinate charts and uniform samplers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::catalog::{ConfigurationMap, Side};
use crate::linalg::{dot, reject};
use crate::rng::{counter_rng, streams, unit, unit_sphere};
use crate::scalar::Real;

/// A space of points, hyperplanes, spheres or lines in `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    /// `R^d`, coordinates `x`.
    Euclidean(usize),
    /// Hyperplanes `{y : omega . y = s}`, coordinates `[omega, s]`.
    Hyperplanes(usize),
    /// Spheres `{y : |y - a| = r}`, coordinates `[a, r]`.
    Spheres(usize),
    /// Lines `{v + s omega}`, coordinates `[omega, v]` with `v . omega = 0`.
    Lines(usize),
}

/// Compact boxes bounding the sampled parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterBox {
    /// Range of Euclidean coordinates, sphere centers, hyperplane offsets and line foot coefficients.
    pub lo: f64,
    pub hi: f64,
    pub radius_lo: f64,
    pub radius_hi: f64,
}

impl Default for ParameterBox {
    fn default() -> Self {
        Self {
            lo: -1.0,
            hi: 1.0,
            radius_lo: 0.1,
            radius_hi: 1.0,
        }
    }
}

impl ParameterBox {
    pub fn unit_cube() -> Self {
        Self {
            lo: 0.0,
            hi: 1.0,
            ..Self::default()
        }
    }
}

/// Draws reserved per sampled point on the parameter-space stream.
const DRAWS_PER_POINT: u64 = 64;

impl Space {
    pub fn ambient(&self) -> usize {
        match *self {
            Space::Euclidean(d) | Space::Hyperplanes(d) | Space::Spheres(d) | Space::Lines(d) => d,
        }
    }

    pub fn manifold_dim(&self) -> usize {
        match *self {
            Space::Euclidean(d) | Space::Hyperplanes(d) => d,
            Space::Spheres(d) => d + 1,
            Space::Lines(d) => 2 * d - 2,
        }
    }

    pub fn coord_dim(&self) -> usize {
        match *self {
            Space::Euclidean(d) => d,
            Space::Hyperplanes(d) | Space::Spheres(d) => d + 1,
            Space::Lines(d) => 2 * d,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self, Space::Euclidean(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Space::Euclidean(_) => "points",
            Space::Hyperplanes(_) => "hyperplanes",
            Space::Spheres(_) => "spheres",
            Space::Lines(_) => "lines",
        }
    }

    /// Maps chart coordinates `u in [0, 1]^manifold_dim` to parameter coordinates.
    ///
    /// Directions use the gnomonic chart of the upper hemisphere,
    /// `omega = (z, 1) / |(z, 1)|` with `z in [-1, 1]^(d-1)`; line foot points are
    /// expanded in the Gram-Schmidt basis of `omega^perp` built from `e_1 .. e_(d-1)`.
    pub fn chart<T: Real>(&self, u: &[T], b: &ParameterBox) -> Vec<T> {
        debug_assert_eq!(u.len(), self.manifold_dim());
        let affine = |x: T, lo: f64, hi: f64| T::lit(lo) + T::lit(hi - lo) * x;
        match *self {
            Space::Euclidean(_) => u.iter().map(|&x| affine(x, b.lo, b.hi)).collect(),
            Space::Hyperplanes(d) => {
                let mut c = gnomonic(&u[..d - 1]);
                c.push(affine(u[d - 1], b.lo, b.hi));
                c
            }
            Space::Spheres(d) => {
                let mut c: Vec<T> = u[..d].iter().map(|&x| affine(x, b.lo, b.hi)).collect();
                c.push(affine(u[d], b.radius_lo, b.radius_hi));
                c
            }
            Space::Lines(d) => {
                let omega = gnomonic(&u[..d - 1]);
                let basis = complement_basis(&omega);
                let mut v = vec![T::zero(); d];
                for (e, &x) in basis.iter().zip(&u[d - 1..]) {
                    let c = affine(x, b.lo, b.hi);
                    for (vi, &ei) in v.iter_mut().zip(e) {
                        *vi = *vi + c * ei;
                    }
                }
                let mut c = omega;
                c.extend(v);
                c
            }
        }
    }

    /// Crude upper bound on the Lipschitz constant of [`Space::chart`].
    pub fn chart_lipschitz(&self, b: &ParameterBox) -> f64 {
        let w = (b.hi - b.lo).abs();
        let reach = b.lo.abs().max(b.hi.abs());
        match *self {
            Space::Euclidean(_) => w,
            Space::Hyperplanes(_) => 2.0 + w,
            Space::Spheres(_) => w.max((b.radius_hi - b.radius_lo).abs()),
            Space::Lines(d) => 2.0 + w + 4.0 * reach * ((d - 1) as f64).sqrt(),
        }
    }

    /// One uniformly distributed parameter point drawn at `index` of the stream.
    fn sample_one<T: Real>(&self, seed: u64, index: u64, b: &ParameterBox) -> Vec<T> {
        let mut rng = counter_rng(seed, streams::PARAMETER_SPACE, index * DRAWS_PER_POINT);
        let box_coord = |rng: &mut _| T::lit(b.lo + (b.hi - b.lo) * unit(rng));
        match *self {
            Space::Euclidean(d) => (0..d).map(|_| box_coord(&mut rng)).collect(),
            Space::Hyperplanes(d) => {
                let mut c: Vec<T> = unit_sphere(&mut rng, d);
                c.push(box_coord(&mut rng));
                c
            }
            Space::Spheres(d) => {
                let mut c: Vec<T> = (0..d).map(|_| box_coord(&mut rng)).collect();
                c.push(T::lit(
                    b.radius_lo + (b.radius_hi - b.radius_lo) * unit(&mut rng),
                ));
                c
            }
            Space::Lines(d) => {
                let omega: Vec<T> = unit_sphere(&mut rng, d);
                let p: Vec<T> = (0..d).map(|_| box_coord(&mut rng)).collect();
                let v = reject(&p, &omega);
                let mut c = omega;
                c.extend(v);
                c
            }
        }
    }

    /// `n` uniformly distributed parameter points; point `i` depends only on `(seed, i)`.
    pub fn sample_uniform<T: Real>(&self, n: usize, seed: u64, b: &ParameterBox) -> Vec<Vec<T>> {
        (0..n as u64)
            .into_par_iter()
            .map(|i| self.sample_one(seed, i, b))
            .collect()
    }
}

fn gnomonic<T: Real>(u: &[T]) -> Vec<T> {
    let mut w: Vec<T> = u.iter().map(|&x| T::lit(2.0) * x - T::one()).collect();
    w.push(T::one());
    let n = dot(&w, &w).sqrt();
    w.iter().map(|&x| x / n).collect()
}

/// Orthonormal basis of `omega^perp` from `e_1 .. e_(d-1)`; requires `omega_d != 0`.
fn complement_basis<T: Real>(omega: &[T]) -> Vec<Vec<T>> {
    let d = omega.len();
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(d - 1);
    for j in 0..d - 1 {
        let mut e = vec![T::zero(); d];
        e[j] = T::one();
        let mut v = reject(&e, omega);
        for q in &basis {
            v = reject(&v, q);
        }
        let n = dot(&v, &v).sqrt();
        basis.push(v.iter().map(|&x| x / n).collect());
    }
    basis
}

/// `n` uniform samples from the `X` or `Y` parameter space of `map`, deterministic per seed.
pub fn sample_parameter_space<T: Real>(
    map: &ConfigurationMap<T>,
    which: Side,
    n: usize,
    seed: u64,
    bounds: &ParameterBox,
) -> Vec<Vec<T>> {
    map.space(which).sample_uniform(n, seed, bounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Line, MapKind};

    #[test]
    fn sampled_lines_satisfy_invariants() {
        let map = ConfigurationMap::<f64>::new(MapKind::LinePoint { d: 3 }).unwrap();
        let pts = sample_parameter_space(&map, Side::X, 10, 4, &ParameterBox::default());
        assert_eq!(pts.len(), 10);
        for p in &pts {
            assert_eq!(p.len(), 6);
            Line::from_coords(p).unwrap();
        }
        let ys = sample_parameter_space(&map, Side::Y, 10, 4, &ParameterBox::default());
        assert!(ys.iter().all(|y| y.len() == 3));
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = Space::Lines(4);
        let a: Vec<Vec<f64>> = s.sample_uniform(50, 11, &ParameterBox::default());
        let b: Vec<Vec<f64>> = s.sample_uniform(50, 11, &ParameterBox::default());
        let c: Vec<Vec<f64>> = s.sample_uniform(50, 12, &ParameterBox::default());
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn charts_land_in_space() {
        let b = ParameterBox::default();
        for s in [
            Space::Lines(3),
            Space::Lines(5),
            Space::Hyperplanes(3),
            Space::Spheres(2),
        ] {
            let u: Vec<f64> = (0..s.manifold_dim())
                .map(|i| (i as f64 * 0.37) % 1.0)
                .collect();
            let c = s.chart(&u, &b);
            assert_eq!(c.len(), s.coord_dim());
            match s {
                Space::Lines(_) => {
                    Line::from_coords(&c).unwrap();
                }
                Space::Hyperplanes(d) => {
                    assert!((dot(&c[..d], &c[..d]) - 1.0).abs() < 1e-12)
                }
                Space::Spheres(d) => assert!(c[d] >= b.radius_lo && c[d] <= b.radius_hi),
                Space::Euclidean(_) => {}
            }
        }
    }

    #[test]
    fn spheres_and_hyperplanes_in_bounds() {
        let b = ParameterBox::default();
        let pts: Vec<Vec<f64>> = Space::Spheres(3).sample_uniform(200, 1, &b);
        assert!(pts.iter().all(|p| p[3] >= 0.1 && p[3] <= 1.0));
        let hs: Vec<Vec<f64>> = Space::Hyperplanes(3).sample_uniform(200, 1, &b);
        assert!(hs
            .iter()
            .all(|p| (dot(&p[..3], &p[..3]) - 1.0).abs() < 1e-12));
    }
}

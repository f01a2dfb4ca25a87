//! Affine lines in `R^d` as points of the tangent bundle of the sphere.
//!
//! A line is stored as `(omega, v)` with `|omega| = 1` and `v . omega = 0`; it is
//! the set `{v + s omega : s in R}`. In flat coordinate form a line is the
//! concatenation `[omega, v]` of length `2d`.

use super::GeometryError;
use crate::linalg::{dot, norm, reject};
use crate::scalar::Real;

/// `|omega . omega'|` above which two lines are treated as parallel.
pub const PARALLEL_COS: f64 = 1.0 - 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Line<T> {
    omega: Vec<T>,
    v: Vec<T>,
}

impl<T: Real> Line<T> {
    /// Validates `|omega| = 1` and `v . omega = 0` within [`Real::invariant_tol`].
    pub fn new(omega: Vec<T>, v: Vec<T>) -> Result<Self, GeometryError> {
        if omega.len() != v.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: omega.len(),
                found: v.len(),
            });
        }
        if omega.len() < 2 {
            return Err(GeometryError::InvalidArgument(
                "lines need ambient dimension >= 2".into(),
            ));
        }
        let tol = T::invariant_tol();
        let n = norm(&omega);
        if (n - T::one()).abs() > tol {
            return Err(GeometryError::InvalidArgument(format!(
                "line direction has norm {n}, expected 1"
            )));
        }
        let vw = dot(&v, &omega);
        if vw.abs() > tol {
            return Err(GeometryError::InvalidArgument(format!(
                "line foot point not orthogonal to direction (v.omega = {vw})"
            )));
        }
        Ok(Self { omega, v })
    }

    /// Line through `point` with direction `direction` (any nonzero length).
    ///
    /// The direction is normalized and the foot point is the projection of
    /// `point` onto the orthogonal complement of the direction.
    pub fn through(point: &[T], direction: &[T]) -> Result<Self, GeometryError> {
        if point.len() != direction.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: direction.len(),
                found: point.len(),
            });
        }
        let n = norm(direction);
        if n <= T::zero() || !n.is_finite() {
            return Err(GeometryError::InvalidArgument(
                "line direction must be nonzero".into(),
            ));
        }
        let omega: Vec<T> = direction.iter().map(|&x| x / n).collect();
        let v = reject(point, &omega);
        Self::new(omega, v)
    }

    /// Parses the flat `[omega, v]` form.
    pub fn from_coords(coords: &[T]) -> Result<Self, GeometryError> {
        if !coords.len().is_multiple_of(2) {
            return Err(GeometryError::InvalidArgument(
                "line coordinates must have even length".into(),
            ));
        }
        let d = coords.len() / 2;
        Self::new(coords[..d].to_vec(), coords[d..].to_vec())
    }

    pub fn to_coords(&self) -> Vec<T> {
        let mut c = self.omega.clone();
        c.extend_from_slice(&self.v);
        c
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn omega(&self) -> &[T] {
        &self.omega
    }

    pub fn foot(&self) -> &[T] {
        &self.v
    }

    /// The point `v + s omega`.
    pub fn point_at(&self, s: T) -> Vec<T> {
        self.v
            .iter()
            .zip(&self.omega)
            .map(|(&v, &w)| v + s * w)
            .collect()
    }
}

/// Euclidean distance from `y` to the line: `|P(v - y)|` with `P` the projection onto `omega^perp`.
pub fn line_point_distance<T: Real>(line: &Line<T>, y: &[T]) -> Result<T, GeometryError> {
    if y.len() != line.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: line.dim(),
            found: y.len(),
        });
    }
    Ok(raw_line_point_distance(line.omega(), line.foot(), y))
}

/// Half the squared distance, smooth across the line itself.
pub fn phi_line_point_smooth<T: Real>(line: &Line<T>, y: &[T]) -> Result<T, GeometryError> {
    let d = line_point_distance(line, y)?;
    Ok(T::lit(0.5) * d * d)
}

#[inline]
pub(crate) fn raw_line_point_distance<T: Real>(omega: &[T], v: &[T], y: &[T]) -> T {
    let mut uw = T::zero();
    for i in 0..omega.len() {
        uw = uw + (v[i] - y[i]) * omega[i];
    }
    let mut acc = T::zero();
    for i in 0..omega.len() {
        let c = v[i] - y[i] - uw * omega[i];
        acc = acc + c * c;
    }
    acc.sqrt()
}

/// Distance between two lines in the same `R^d`.
///
/// With `u = v - v'`, the minimum of `|u + s omega - s' omega'|` is the length of
/// the component of `P u` orthogonal to `P omega'`, where `P` projects onto
/// `omega^perp`. This is the solution of the 2x2 normal equations with Gram matrix
/// `[[1, -c], [-c, 1]]`, `c = omega . omega'`. Parallel lines fall back to `|P u|`.
pub fn line_line_distance<T: Real>(a: &Line<T>, b: &Line<T>) -> Result<T, GeometryError> {
    if a.dim() != b.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(raw_line_line_distance(
        a.omega(),
        a.foot(),
        b.omega(),
        b.foot(),
    ))
}

pub(crate) fn raw_line_line_distance<T: Real>(w1: &[T], v1: &[T], w2: &[T], v2: &[T]) -> T {
    let d = w1.len();
    let c = dot(w1, w2);
    let mut u = Vec::with_capacity(d);
    for i in 0..d {
        u.push(v1[i] - v2[i]);
    }
    if c.abs() > T::lit(PARALLEL_COS) {
        return (norm(&reject(&u, w1)) + norm(&reject(&u, w2))) * T::lit(0.5);
    }
    // Symmetrized evaluation: the formula is exact either way round, averaging
    // the two projections keeps the result symmetric to rounding.
    let one = one_sided(w1, w2, &u, c);
    let neg_u: Vec<T> = u.iter().map(|&x| -x).collect();
    let two = one_sided(w2, w1, &neg_u, c);
    (one + two) * T::lit(0.5)
}

fn one_sided<T: Real>(w1: &[T], w2: &[T], u: &[T], c: T) -> T {
    let w = reject(u, w1);
    let e = reject(w2, w1);
    let ee = T::one() - c * c;
    let ee = ee.max(dot(&e, &e));
    let coef = dot(&w, &e) / ee;
    let mut acc = T::zero();
    for i in 0..w.len() {
        let r = w[i] - coef * e[i];
        acc = acc + r * r;
    }
    acc.sqrt()
}

//! Nonsingular ensembles of quadratic forms and Radon-Hurwitz numbers.
//!
//! An ensemble `(Q_1, ..., Q_k)` on `R^d`, `Q_j(x) = x^T A_j x`, is nonsingular when
//! every nontrivial combination `sum c_j A_j` is an invertible matrix. Such
//! ensembles exist iff `k <= rho(d/2) + 1`.

use num_rational::Rational64;
use serde::Serialize;

use super::GeometryError;
use crate::linalg::det;
use crate::rng::{counter_rng, streams, unit_sphere};
use crate::scalar::Real;

/// Radon-Hurwitz number of a positive integer: for `n = (2l + 1) 2^(p + 4q)`,
/// `0 <= p <= 3`, returns `2^p + 8q`.
pub fn radon_hurwitz_int(n: u64) -> Result<u64, GeometryError> {
    if n == 0 {
        return Err(GeometryError::InvalidArgument(
            "Radon-Hurwitz number needs n > 0".into(),
        ));
    }
    let m = u64::from(n.trailing_zeros());
    let (p, q) = (m % 4, m / 4);
    Ok((1 << p) + 8 * q)
}

/// Radon-Hurwitz number of a positive integer or half-integer (half-integers map to 0).
pub fn radon_hurwitz(n: Rational64) -> Result<u64, GeometryError> {
    if n <= Rational64::from_integer(0) {
        return Err(GeometryError::InvalidArgument(format!(
            "Radon-Hurwitz number needs n > 0, got {n}"
        )));
    }
    let twice = n * 2;
    if !twice.is_integer() {
        return Err(GeometryError::InvalidArgument(format!(
            "Radon-Hurwitz number defined on integers and half-integers, got {n}"
        )));
    }
    if !n.is_integer() {
        return Ok(0);
    }
    radon_hurwitz_int(n.to_integer() as u64)
}

/// Largest `k` admitting a nonsingular ensemble of `k` quadratic forms on `R^d`: `rho(d/2) + 1`.
pub fn alp_max_k(d: usize) -> usize {
    assert!(d >= 1, "dimension must be positive");
    let rho = radon_hurwitz(Rational64::new(d as i64, 2)).expect("d/2 is a positive half-integer");
    rho as usize + 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticEnsemble<T> {
    d: usize,
    /// `k` symmetric `d x d` matrices, row-major.
    matrices: Vec<Vec<T>>,
}

impl<T: Real> QuadraticEnsemble<T> {
    pub fn new(d: usize, matrices: Vec<Vec<T>>) -> Result<Self, GeometryError> {
        if d == 0 || matrices.is_empty() {
            return Err(GeometryError::InvalidArgument(
                "ensemble needs d >= 1 and at least one form".into(),
            ));
        }
        let tol = T::invariant_tol();
        for a in &matrices {
            if a.len() != d * d {
                return Err(GeometryError::DimensionMismatch {
                    expected: d * d,
                    found: a.len(),
                });
            }
            for i in 0..d {
                for j in 0..i {
                    if (a[i * d + j] - a[j * d + i]).abs() > tol {
                        return Err(GeometryError::InvalidArgument(
                            "quadratic form matrix is not symmetric".into(),
                        ));
                    }
                }
            }
        }
        let max_k = alp_max_k(d);
        if matrices.len() > max_k {
            return Err(GeometryError::MaxKExceeded {
                d,
                k: matrices.len(),
                max_k,
            });
        }
        Ok(Self { d, matrices })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[Vec<T>] {
        &self.matrices
    }

    /// `(Q_1(z), ..., Q_k(z))` written into `out`.
    #[inline]
    pub fn eval_into(&self, z: &[T], out: &mut [T]) {
        let d = self.d;
        for (a, o) in self.matrices.iter().zip(out.iter_mut()) {
            let mut acc = T::zero();
            for i in 0..d {
                let mut row = T::zero();
                for j in 0..d {
                    row = row + a[i * d + j] * z[j];
                }
                acc = acc + z[i] * row;
            }
            *o = acc;
        }
    }

    pub fn eval(&self, z: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.k()];
        self.eval_into(z, &mut out);
        out
    }

    /// `sum_j c_j A_j`.
    pub fn combination(&self, c: &[T]) -> Vec<T> {
        let mut m = vec![T::zero(); self.d * self.d];
        for (a, &cj) in self.matrices.iter().zip(c) {
            for (mi, &ai) in m.iter_mut().zip(a) {
                *mi = *mi + cj * ai;
            }
        }
        m
    }

    pub fn combination_det(&self, c: &[T]) -> T {
        det(&self.combination(c), self.d)
    }
}

fn zeros<T: Real>(d: usize) -> Vec<T> {
    vec![T::zero(); d * d]
}

fn set_sym<T: Real>(m: &mut [T], d: usize, i: usize, j: usize, v: T) {
    m[i * d + j] = v;
    m[j * d + i] = v;
}

/// The `(d = 2, k = 2)` pair `x1^2 - x2^2`, `x1 x2` placed on coordinates `off, off + 1`.
fn planar_pair<T: Real>(d: usize, off: usize) -> [Vec<T>; 2] {
    let mut a1 = zeros(d);
    a1[off * d + off] = T::one();
    a1[(off + 1) * d + off + 1] = -T::one();
    let mut a2 = zeros(d);
    set_sym(&mut a2, d, off, off + 1, T::lit(0.5));
    [a1, a2]
}

/// The quaternionic triple on coordinates `off .. off + 4`:
/// `x1^2 + x2^2 - x3^2 - x4^2`, `2(x1 x3 + x2 x4)`, `2(x1 x4 - x2 x3)`.
fn quaternion_triple<T: Real>(d: usize, off: usize) -> [Vec<T>; 3] {
    let mut a1 = zeros(d);
    for (i, s) in [1.0, 1.0, -1.0, -1.0].into_iter().enumerate() {
        a1[(off + i) * d + off + i] = T::lit(s);
    }
    let mut a2 = zeros(d);
    set_sym(&mut a2, d, off, off + 2, T::one());
    set_sym(&mut a2, d, off + 1, off + 3, T::one());
    let mut a3 = zeros(d);
    set_sym(&mut a3, d, off, off + 3, T::one());
    set_sym(&mut a3, d, off + 1, off + 2, -T::one());
    [a1, a2, a3]
}

/// Builds a nonsingular ensemble of `k` forms on `R^d`.
///
/// Provided constructions: `k = 1` (the form `|x|^2`) for any `d`; `k = 2` for even `d`
/// (block copies of `{x1^2 - x2^2, x1 x2}`); `k = 3` for `d` divisible by 4 (block
/// copies of the quaternionic triple). Block-diagonal copies stay nonsingular because
/// the determinant of a block combination is the product of the block determinants.
pub fn build_quadratic_ensemble<T: Real>(
    d: usize,
    k: usize,
) -> Result<QuadraticEnsemble<T>, GeometryError> {
    if d == 0 || k == 0 {
        return Err(GeometryError::InvalidArgument(
            "ensemble needs d >= 1 and k >= 1".into(),
        ));
    }
    let max_k = alp_max_k(d);
    if k > max_k {
        return Err(GeometryError::MaxKExceeded { d, k, max_k });
    }
    let matrices = match k {
        1 => {
            let mut a = zeros(d);
            for i in 0..d {
                a[i * d + i] = T::one();
            }
            vec![a]
        }
        2 if d.is_multiple_of(2) => {
            let mut out = vec![zeros(d), zeros(d)];
            for b in 0..d / 2 {
                for (acc, m) in out.iter_mut().zip(planar_pair::<T>(d, 2 * b)) {
                    for (x, y) in acc.iter_mut().zip(m) {
                        *x = *x + y;
                    }
                }
            }
            out
        }
        3 if d.is_multiple_of(4) => {
            let mut out = vec![zeros(d), zeros(d), zeros(d)];
            for b in 0..d / 4 {
                for (acc, m) in out.iter_mut().zip(quaternion_triple::<T>(d, 4 * b)) {
                    for (x, y) in acc.iter_mut().zip(m) {
                        *x = *x + y;
                    }
                }
            }
            out
        }
        _ => return Err(GeometryError::Unsupported { d, k }),
    };
    QuadraticEnsemble::new(d, matrices)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonsingularityReport {
    pub pass: bool,
    pub min_abs_det: f64,
    pub argmin: Vec<f64>,
    pub probes: usize,
}

/// `|det|` below which a combination counts as singular.
pub const SINGULAR_DET: f64 = 1e-9;

/// Probes `det(sum c_j A_j)` on the unit sphere of `R^k`.
///
/// The `2k` signed coordinate directions are probed first, then `trials` uniform
/// random directions. Passes iff the smallest observed `|det|` exceeds [`SINGULAR_DET`].
pub fn ensemble_nonsingularity_check<T: Real>(
    ens: &QuadraticEnsemble<T>,
    trials: usize,
    seed: u64,
) -> NonsingularityReport {
    let k = ens.k();
    let mut best = f64::INFINITY;
    let mut argmin = vec![0.0; k];
    let mut probes = 0usize;
    let mut consider = |c: &[T]| {
        let v = ens.combination_det(c).abs().to_f64_lossy();
        probes += 1;
        if v < best || probes == 1 {
            best = v;
            argmin = c.iter().map(|x| x.to_f64_lossy()).collect();
        }
    };
    for j in 0..k {
        for s in [1.0, -1.0] {
            let mut c = vec![T::zero(); k];
            c[j] = T::lit(s);
            consider(&c);
        }
    }
    let mut rng = counter_rng(seed, streams::ENSEMBLE, 0);
    for _ in 0..trials {
        let c: Vec<T> = unit_sphere(&mut rng, k);
        consider(&c);
    }
    NonsingularityReport {
        pass: best > SINGULAR_DET,
        min_abs_det: best,
        argmin,
        probes,
    }
}

use std::f64::consts::PI;

use super::MeasureError;
use crate::scalar::Real;

/// Scaled bump `chi_eps(u) = eps^-k chi(u / eps)` with `chi(u) = c_k (1 - |u|^2)^4` on the unit ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier<T> {
    k: usize,
    eps: T,
    /// `c_k eps^-k`.
    scale: T,
    inv_eps2: T,
}

/// `c_k` making `chi` a probability density on `R^k`.
pub fn profile_constant(k: usize) -> Option<f64> {
    match k {
        1 => Some(315.0 / 256.0),
        2 => Some(5.0 / PI),
        3 => Some(3465.0 / (512.0 * PI)),
        4 => Some(30.0 / (PI * PI)),
        _ => None,
    }
}

impl<T: Real> Mollifier<T> {
    pub fn new(k: usize, eps: T) -> Result<Self, MeasureError> {
        let c = profile_constant(k).ok_or_else(|| {
            MeasureError::InvalidArgument(format!("mollifier defined for k <= 4, got {k}"))
        })?;
        if !(eps > T::zero() && eps.is_finite()) {
            return Err(MeasureError::InvalidArgument(format!(
                "eps must be positive, got {eps}"
            )));
        }
        Ok(Self {
            k,
            eps,
            scale: T::lit(c) / eps.powi(k as i32),
            inv_eps2: T::one() / (eps * eps),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    /// `chi_eps` evaluated at squared norm `r2 = |u|^2`.
    #[inline]
    pub fn at_sq(&self, r2: T) -> T {
        let s = T::one() - r2 * self.inv_eps2;
        if s <= T::zero() {
            return T::zero();
        }
        let s2 = s * s;
        self.scale * s2 * s2
    }

    #[inline]
    pub fn eval(&self, u: &[T]) -> T {
        debug_assert_eq!(u.len(), self.k);
        self.at_sq(u.iter().fold(T::zero(), |a, &x| a + x * x))
    }
}

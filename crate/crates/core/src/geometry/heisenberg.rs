//! The first Heisenberg group `R^2 x R` with product
//! `(x', x3) . (y', y3) = (x' + y', x3 + y3 + x'^T J y' / 2)`, `J = [[0, -1], [1, 0]]`.

use std::ops::Mul;

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeisPoint<T> {
    pub xp: [T; 2],
    pub x3: T,
}

impl<T: Real> HeisPoint<T> {
    pub fn new(x1: T, x2: T, x3: T) -> Self {
        Self { xp: [x1, x2], x3 }
    }

    pub fn identity() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn from_coords(c: &[T]) -> Option<Self> {
        match c {
            [a, b, z] => Some(Self::new(*a, *b, *z)),
            _ => None,
        }
    }

    pub fn to_coords(self) -> [T; 3] {
        [self.xp[0], self.xp[1], self.x3]
    }

    pub fn inverse(self) -> Self {
        Self::new(-self.xp[0], -self.xp[1], -self.x3)
    }
}

/// `x'^T J y' = x2 y1 - x1 y2`.
#[inline]
fn symplectic<T: Real>(x: [T; 2], y: [T; 2]) -> T {
    x[1] * y[0] - x[0] * y[1]
}

impl<T: Real> Mul for HeisPoint<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.xp[0] + rhs.xp[0],
            self.xp[1] + rhs.xp[1],
            self.x3 + rhs.x3 + T::lit(0.5) * symplectic(self.xp, rhs.xp),
        )
    }
}

/// `(|x' - y'|, x3 - y3 + (x1 y2 - x2 y1) / 2)`: horizontal length and height of `x . y^{-1}`.
#[inline]
pub fn heisenberg_phi<T: Real>(x: &[T], y: &[T]) -> [T; 2] {
    let dx = x[0] - y[0];
    let dy = x[1] - y[1];
    [
        dx.hypot(dy),
        x[2] - y[2] + T::lit(0.5) * (x[0] * y[1] - x[1] * y[0]),
    ]
}

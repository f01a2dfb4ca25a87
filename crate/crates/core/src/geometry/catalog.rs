//! Configuration maps `Phi: X x Y -> R^k` with their smoothing data and thresholds.

use num_rational::Rational64;

use super::heisenberg::heisenberg_phi;
use super::lines::{raw_line_line_distance, raw_line_point_distance};
use super::quadratic::{build_quadratic_ensemble, QuadraticEnsemble};
use super::space::Space;
use super::GeometryError;
use crate::linalg::det;
use crate::scalar::Real;

/// Inputs closer than this to a degenerate configuration are rejected.
pub const SINGULAR_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind<T> {
    /// `|x - y|` on `R^d`.
    Distance { d: usize },
    /// `|M (x - y)|` for a symmetric positive-definite `M` (row-major `d x d`).
    EllipsoidNorm { d: usize, matrix: Vec<T> },
    /// `x - y` on `R^d`, `k = d`.
    Difference { d: usize },
    /// `(|x^1 - y^1|, ..., |x^k - y^k|)` for the block split `d = d_1 + ... + d_k`.
    MultiDistance { blocks: Vec<usize> },
    /// `|omega . y - s|` for hyperplanes `(omega, s)` and points `y` of `R^d`.
    HyperplanePoint { d: usize },
    /// `|y - a| - r` for spheres `(a, r)` and points `y` of `R^d`.
    SpherePoint { d: usize },
    /// Distance from lines `(omega, v)` to points of `R^d`.
    LinePoint { d: usize },
    /// Distance between lines of `R^d`.
    LineLine { d: usize },
    /// `Q(x - y)` for a nonsingular quadratic ensemble.
    Quadratic(QuadraticEnsemble<T>),
    /// Horizontal length and height of `x . y^{-1}` in the Heisenberg group.
    Heisenberg,
    /// `x' - y' - g(x_1 - y_1)` for the moment curve `(t, t^2, ..., t^d)`.
    MomentCurve { d: usize },
    /// Step-two group with `n`-dimensional first and `m`-dimensional second layer.
    /// Only the smoothing data is cataloged; the map cannot be evaluated.
    StepTwo { n: usize, m: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationMap<T> {
    kind: MapKind<T>,
}

/// Which factor of `X x Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    X,
    Y,
}

/// Parameters for [`ConfigurationMap::from_name`]. Unused fields are ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MapParams {
    pub d: Option<usize>,
    pub k: Option<usize>,
    pub blocks: Option<Vec<usize>>,
    pub matrix: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub m: Option<usize>,
}

pub const MAP_NAMES: &[&str] = &[
    "distance",
    "norm",
    "difference",
    "multi_distance",
    "hyperplane_point",
    "sphere_point",
    "line_point",
    "line_line",
    "quadratic",
    "heisenberg",
    "moment_curve",
    "step_two",
];

fn need_d(d: usize, min: usize, what: &str) -> Result<(), GeometryError> {
    if d < min {
        return Err(GeometryError::InvalidArgument(format!(
            "{what} needs d >= {min}, got {d}"
        )));
    }
    Ok(())
}

impl<T: Real> ConfigurationMap<T> {
    pub fn new(kind: MapKind<T>) -> Result<Self, GeometryError> {
        match &kind {
            MapKind::Distance { d } | MapKind::Difference { d } => need_d(*d, 1, "map")?,
            MapKind::EllipsoidNorm { d, matrix } => {
                need_d(*d, 1, "norm")?;
                validate_spd(*d, matrix)?;
            }
            MapKind::MultiDistance { blocks } => {
                if blocks.is_empty() || blocks.contains(&0) {
                    return Err(GeometryError::InvalidArgument(
                        "multi_distance needs nonempty blocks of positive size".into(),
                    ));
                }
            }
            MapKind::HyperplanePoint { d } | MapKind::SpherePoint { d } => need_d(*d, 2, "map")?,
            MapKind::LinePoint { d } | MapKind::LineLine { d } => need_d(*d, 3, "line map")?,
            MapKind::Quadratic(_) | MapKind::Heisenberg => {}
            MapKind::MomentCurve { d } => need_d(*d, 2, "moment_curve")?,
            MapKind::StepTwo { n, m } => {
                if *n < 2 || n % 2 != 0 || *m < 1 {
                    return Err(GeometryError::InvalidArgument(
                        "step_two needs even n >= 2 and m >= 1".into(),
                    ));
                }
            }
        }
        Ok(Self { kind })
    }

    pub fn distance(d: usize) -> Self {
        Self::new(MapKind::Distance { d }).expect("valid distance map")
    }

    pub fn difference(d: usize) -> Self {
        Self::new(MapKind::Difference { d }).expect("valid difference map")
    }

    pub fn heisenberg() -> Self {
        Self {
            kind: MapKind::Heisenberg,
        }
    }

    /// Builds a cataloged map by name.
    pub fn from_name(name: &str, p: &MapParams) -> Result<Self, GeometryError> {
        let d = || {
            p.d.ok_or_else(|| GeometryError::InvalidArgument(format!("map {name} needs d")))
        };
        let kind = match name {
            "distance" => MapKind::Distance { d: d()? },
            "norm" => {
                let d = d()?;
                let matrix = p
                    .matrix
                    .as_ref()
                    .ok_or_else(|| GeometryError::InvalidArgument("norm needs matrix".into()))?;
                MapKind::EllipsoidNorm {
                    d,
                    matrix: matrix.iter().map(|&x| T::lit(x)).collect(),
                }
            }
            "difference" => MapKind::Difference { d: d()? },
            "multi_distance" => MapKind::MultiDistance {
                blocks: p.blocks.clone().ok_or_else(|| {
                    GeometryError::InvalidArgument("multi_distance needs blocks".into())
                })?,
            },
            "hyperplane_point" => MapKind::HyperplanePoint { d: d()? },
            "sphere_point" => MapKind::SpherePoint { d: d()? },
            "line_point" => MapKind::LinePoint { d: d()? },
            "line_line" => MapKind::LineLine { d: d()? },
            "quadratic" => {
                let k =
                    p.k.ok_or_else(|| GeometryError::InvalidArgument("quadratic needs k".into()))?;
                MapKind::Quadratic(build_quadratic_ensemble(d()?, k)?)
            }
            "heisenberg" => MapKind::Heisenberg,
            "moment_curve" => MapKind::MomentCurve { d: d()? },
            "step_two" => MapKind::StepTwo {
                n: p.n
                    .ok_or_else(|| GeometryError::InvalidArgument("step_two needs n".into()))?,
                m: p.m
                    .ok_or_else(|| GeometryError::InvalidArgument("step_two needs m".into()))?,
            },
            other => return Err(GeometryError::UnknownMap(other.to_string())),
        };
        Self::new(kind)
    }

    pub fn kind(&self) -> &MapKind<T> {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            MapKind::Distance { .. } => "distance",
            MapKind::EllipsoidNorm { .. } => "norm",
            MapKind::Difference { .. } => "difference",
            MapKind::MultiDistance { .. } => "multi_distance",
            MapKind::HyperplanePoint { .. } => "hyperplane_point",
            MapKind::SpherePoint { .. } => "sphere_point",
            MapKind::LinePoint { .. } => "line_point",
            MapKind::LineLine { .. } => "line_line",
            MapKind::Quadratic(_) => "quadratic",
            MapKind::Heisenberg => "heisenberg",
            MapKind::MomentCurve { .. } => "moment_curve",
            MapKind::StepTwo { .. } => "step_two",
        }
    }

    /// Short human-readable label including the parameters.
    pub fn label(&self) -> String {
        match &self.kind {
            MapKind::Distance { d }
            | MapKind::EllipsoidNorm { d, .. }
            | MapKind::Difference { d }
            | MapKind::HyperplanePoint { d }
            | MapKind::SpherePoint { d }
            | MapKind::LinePoint { d }
            | MapKind::LineLine { d }
            | MapKind::MomentCurve { d } => format!("{}(d={d})", self.name()),
            MapKind::MultiDistance { blocks } => format!("multi_distance(blocks={blocks:?})"),
            MapKind::Quadratic(q) => format!("quadratic(d={},k={})", q.d(), q.k()),
            MapKind::Heisenberg => "heisenberg".into(),
            MapKind::StepTwo { n, m } => format!("step_two(n={n},m={m})"),
        }
    }

    pub fn space(&self, side: Side) -> Space {
        match (&self.kind, side) {
            (MapKind::HyperplanePoint { d }, Side::X) => Space::Hyperplanes(*d),
            (MapKind::SpherePoint { d }, Side::X) => Space::Spheres(*d),
            (MapKind::LinePoint { d }, Side::X) | (MapKind::LineLine { d }, _) => Space::Lines(*d),
            (MapKind::HyperplanePoint { d }, Side::Y)
            | (MapKind::SpherePoint { d }, Side::Y)
            | (MapKind::LinePoint { d }, Side::Y) => Space::Euclidean(*d),
            (kind, _) => Space::Euclidean(ambient_dim(kind)),
        }
    }

    /// Manifold dimension of `X`.
    pub fn d1(&self) -> usize {
        self.space(Side::X).manifold_dim()
    }

    /// Manifold dimension of `Y`.
    pub fn d2(&self) -> usize {
        self.space(Side::Y).manifold_dim()
    }

    /// Length of coordinate vectors representing points of `X`.
    pub fn x_coords(&self) -> usize {
        self.space(Side::X).coord_dim()
    }

    pub fn y_coords(&self) -> usize {
        self.space(Side::Y).coord_dim()
    }

    /// Codomain dimension.
    pub fn k(&self) -> usize {
        match &self.kind {
            MapKind::Difference { d } => *d,
            MapKind::MultiDistance { blocks } => blocks.len(),
            MapKind::Quadratic(q) => q.k(),
            MapKind::Heisenberg => 2,
            MapKind::MomentCurve { d } => d - 1,
            MapKind::StepTwo { m, .. } => m + 1,
            _ => 1,
        }
    }

    /// Absolute Sobolev smoothing of the associated Radon transforms.
    pub fn alpha(&self) -> Rational64 {
        let r = |n: i64, d: i64| Rational64::new(n, d);
        let best = self.optimal_smoothing();
        match &self.kind {
            MapKind::Difference { .. } => r(0, 1),
            MapKind::MultiDistance { blocks } => {
                let min = blocks.iter().copied().min().unwrap_or(1) as i64;
                r(min - 1, 2)
            }
            MapKind::Heisenberg | MapKind::StepTwo { .. } => best - r(1, 6),
            MapKind::MomentCurve { d } => r(1, *d as i64),
            // nondegenerate canonical relations
            _ => best,
        }
    }

    /// `(d2 - k) / 2`, the best possible smoothing.
    pub fn optimal_smoothing(&self) -> Rational64 {
        Rational64::new(self.d2() as i64 - self.k() as i64, 2)
    }

    /// Loss relative to the optimal smoothing.
    pub fn beta(&self) -> Rational64 {
        self.optimal_smoothing() - self.alpha()
    }

    /// `d1 + k + 2 beta`.
    pub fn threshold_sum(&self) -> Rational64 {
        Rational64::from_integer((self.d1() + self.k()) as i64) + self.beta() * 2
    }

    /// Whether `Phi(x + z, y + z) = Phi(x, y)`.
    pub fn is_translation_invariant(&self) -> bool {
        matches!(
            self.kind,
            MapKind::Distance { .. }
                | MapKind::EllipsoidNorm { .. }
                | MapKind::Difference { .. }
                | MapKind::MultiDistance { .. }
                | MapKind::Quadratic(_)
                | MapKind::MomentCurve { .. }
        )
    }

    pub fn is_evaluable(&self) -> bool {
        !matches!(self.kind, MapKind::StepTwo { .. })
    }

    pub fn check_dims(&self, x: &[T], y: &[T]) -> Result<(), GeometryError> {
        if !self.is_evaluable() {
            return Err(GeometryError::NotEvaluable(self.label()));
        }
        if x.len() != self.x_coords() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.x_coords(),
                found: x.len(),
            });
        }
        if y.len() != self.y_coords() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.y_coords(),
                found: y.len(),
            });
        }
        Ok(())
    }

    /// Whether `(x, y)` lies within [`SINGULAR_MARGIN`] of the degenerate set.
    pub fn is_singular(&self, x: &[T], y: &[T]) -> bool {
        let margin = T::lit(SINGULAR_MARGIN);
        match &self.kind {
            MapKind::Distance { .. } | MapKind::EllipsoidNorm { .. } | MapKind::Quadratic(_) => {
                crate::linalg::dist(x, y) < margin
            }
            MapKind::Difference { .. } | MapKind::MomentCurve { .. } => false,
            MapKind::MultiDistance { blocks } => {
                let mut off = 0;
                blocks.iter().any(|&b| {
                    let s = crate::linalg::dist(&x[off..off + b], &y[off..off + b]) < margin;
                    off += b;
                    s
                })
            }
            MapKind::HyperplanePoint { d } => {
                let (w, s) = (&x[..*d], x[*d]);
                (crate::linalg::dot(w, y) - s).abs() < margin
            }
            MapKind::SpherePoint { d } => {
                x[*d] <= T::zero() || crate::linalg::dist(&x[..*d], y) < margin
            }
            MapKind::LinePoint { d } => raw_line_point_distance(&x[..*d], &x[*d..], y) < margin,
            MapKind::LineLine { d } => {
                raw_line_line_distance(&x[..*d], &x[*d..], &y[..*d], &y[*d..]) < margin
            }
            MapKind::Heisenberg => (x[0] - y[0]).hypot(x[1] - y[1]) < margin,
            MapKind::StepTwo { .. } => true,
        }
    }

    /// Evaluates `Phi(x, y)`.
    pub fn eval(&self, x: &[T], y: &[T]) -> Result<Vec<T>, GeometryError> {
        let mut out = vec![T::zero(); self.k()];
        self.eval_into(x, y, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, x: &[T], y: &[T], out: &mut [T]) -> Result<(), GeometryError> {
        self.check_dims(x, y)?;
        if out.len() != self.k() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.k(),
                found: out.len(),
            });
        }
        if self.eval_raw(x, y, out) {
            Ok(())
        } else {
            Err(GeometryError::SingularConfiguration)
        }
    }

    /// Hot-path evaluation without dimension checks. Returns `false` on singular input.
    #[inline]
    pub(crate) fn eval_raw(&self, x: &[T], y: &[T], out: &mut [T]) -> bool {
        if self.is_singular(x, y) {
            return false;
        }
        match &self.kind {
            MapKind::Distance { .. } => out[0] = crate::linalg::dist(x, y),
            MapKind::EllipsoidNorm { d, matrix } => {
                let mut acc = T::zero();
                for i in 0..*d {
                    let mut row = T::zero();
                    for j in 0..*d {
                        row = row + matrix[i * d + j] * (x[j] - y[j]);
                    }
                    acc = acc + row * row;
                }
                out[0] = acc.sqrt();
            }
            MapKind::Difference { .. } => {
                for ((o, &a), &b) in out.iter_mut().zip(x).zip(y) {
                    *o = a - b;
                }
            }
            MapKind::MultiDistance { blocks } => {
                let mut off = 0;
                for (o, &b) in out.iter_mut().zip(blocks) {
                    *o = crate::linalg::dist(&x[off..off + b], &y[off..off + b]);
                    off += b;
                }
            }
            MapKind::HyperplanePoint { d } => {
                out[0] = (crate::linalg::dot(&x[..*d], y) - x[*d]).abs();
            }
            MapKind::SpherePoint { d } => {
                out[0] = crate::linalg::dist(&x[..*d], y) - x[*d];
            }
            MapKind::LinePoint { d } => out[0] = raw_line_point_distance(&x[..*d], &x[*d..], y),
            MapKind::LineLine { d } => {
                out[0] = raw_line_line_distance(&x[..*d], &x[*d..], &y[..*d], &y[*d..])
            }
            MapKind::Quadratic(q) => {
                let z: Vec<T> = x.iter().zip(y).map(|(&a, &b)| a - b).collect();
                q.eval_into(&z, out);
            }
            MapKind::Heisenberg => {
                let t = heisenberg_phi(x, y);
                out[0] = t[0];
                out[1] = t[1];
            }
            MapKind::MomentCurve { d } => {
                let tau = x[0] - y[0];
                let mut pow = tau;
                for j in 1..*d {
                    pow = pow * tau;
                    out[j - 1] = x[j] - y[j] - pow;
                }
            }
            MapKind::StepTwo { .. } => return false,
        }
        true
    }
}

fn ambient_dim<T: Real>(kind: &MapKind<T>) -> usize {
    match kind {
        MapKind::Distance { d }
        | MapKind::EllipsoidNorm { d, .. }
        | MapKind::Difference { d }
        | MapKind::HyperplanePoint { d }
        | MapKind::SpherePoint { d }
        | MapKind::LinePoint { d }
        | MapKind::LineLine { d }
        | MapKind::MomentCurve { d } => *d,
        MapKind::MultiDistance { blocks } => blocks.iter().sum(),
        MapKind::Quadratic(q) => q.d(),
        MapKind::Heisenberg => 3,
        MapKind::StepTwo { n, m } => n + m,
    }
}

fn validate_spd<T: Real>(d: usize, m: &[T]) -> Result<(), GeometryError> {
    if m.len() != d * d {
        return Err(GeometryError::DimensionMismatch {
            expected: d * d,
            found: m.len(),
        });
    }
    let tol = T::invariant_tol();
    for i in 0..d {
        for j in 0..i {
            if (m[i * d + j] - m[j * d + i]).abs() > tol {
                return Err(GeometryError::InvalidArgument(
                    "norm matrix is not symmetric".into(),
                ));
            }
        }
    }
    // Sylvester's criterion on leading principal minors
    for size in 1..=d {
        let mut minor = Vec::with_capacity(size * size);
        for i in 0..size {
            minor.extend_from_slice(&m[i * d..i * d + size]);
        }
        if det(&minor, size) <= T::zero() {
            return Err(GeometryError::InvalidArgument(
                "norm matrix is not positive definite".into(),
            ));
        }
    }
    Ok(())
}

/// Sufficient bound on `dim E + dim F` for the configuration set to have
/// nonempty interior, as stated for each cataloged family.
pub fn threshold_for<T: Real>(map: &ConfigurationMap<T>) -> Result<Rational64, GeometryError> {
    let int = |v: usize| Rational64::from_integer(v as i64);
    Ok(match map.kind() {
        // distance sets: dim E > (d + 1) / 2
        MapKind::Distance { d } | MapKind::EllipsoidNorm { d, .. } => int(d + 1),
        // Steinhaus setting, where the bound is dim E > d
        MapKind::Difference { d } => int(2 * d),
        MapKind::MultiDistance { blocks } => {
            if blocks.iter().any(|&b| b < 2) {
                return Err(GeometryError::UnknownMap(format!(
                    "{} (multi-parameter distances need every block of size > 1)",
                    map.label()
                )));
            }
            let d: usize = blocks.iter().sum();
            let min = blocks.iter().copied().min().unwrap_or(2);
            // dim E > d - min(d_j - 1) / 2
            int(2 * d) - int(min - 1)
        }
        MapKind::HyperplanePoint { d } => int(d + 1),
        MapKind::SpherePoint { d } => int(d + 2),
        MapKind::LinePoint { d } | MapKind::LineLine { d } => int(2 * d - 1),
        MapKind::Quadratic(q) => int(q.d() + q.k()),
        MapKind::Heisenberg => Rational64::new(16, 3),
        MapKind::StepTwo { n, m } => int(n + 2 * m) + Rational64::new(4, 3),
        MapKind::MomentCurve { d } => int(2 * d) - Rational64::new(2, *d as i64),
    })
}

/// Standard instances of every cataloged family.
pub fn catalog() -> Vec<ConfigurationMap<f64>> {
    let mut out = Vec::new();
    for d in [2, 3] {
        out.push(ConfigurationMap::distance(d));
    }
    out.push(
        ConfigurationMap::new(MapKind::EllipsoidNorm {
            d: 2,
            matrix: vec![2.0, 0.5, 0.5, 1.0],
        })
        .expect("spd"),
    );
    out.push(ConfigurationMap::difference(1));
    out.push(ConfigurationMap::new(MapKind::MultiDistance { blocks: vec![2, 2] }).expect("blocks"));
    for d in [2, 3] {
        out.push(ConfigurationMap::new(MapKind::HyperplanePoint { d }).expect("d >= 2"));
        out.push(ConfigurationMap::new(MapKind::SpherePoint { d }).expect("d >= 2"));
    }
    out.push(ConfigurationMap::new(MapKind::LinePoint { d: 3 }).expect("d = 3"));
    out.push(ConfigurationMap::new(MapKind::LineLine { d: 3 }).expect("d = 3"));
    for (d, k) in [(2, 2), (4, 3)] {
        out.push(
            ConfigurationMap::new(MapKind::Quadratic(
                build_quadratic_ensemble(d, k).expect("constructed"),
            ))
            .expect("valid"),
        );
    }
    out.push(ConfigurationMap::heisenberg());
    for d in [2, 3] {
        out.push(ConfigurationMap::new(MapKind::MomentCurve { d }).expect("d >= 2"));
    }
    out.push(ConfigurationMap::new(MapKind::StepTwo { n: 2, m: 1 }).expect("valid"));
    out
}

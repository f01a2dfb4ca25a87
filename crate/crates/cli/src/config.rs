//! Experiment configuration: one TOML document per experiment.
//!
//! ```toml
//! seed = 1
//! analyses = ["density", "intervals"]
//!
//! [map]
//! name = "distance"
//! d = 2
//!
//! [mu1]
//! kind = "uniform"
//! n = 1000
//!
//! [mu2]
//! kind = "ifs"
//! d = 2
//! m = 4
//! s = 1.7
//! ```
//!
//! Dotted keys (`map.name = "distance"`) are equivalent to the section form.

use std::path::PathBuf;

use configlab::geometry::{ConfigurationMap, MapParams, Side, Space};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_EPS: f64 = 0.01;
pub const DEFAULT_PAIR_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub map: MapConfig,
    pub mu1: GeneratorSpec,
    pub mu2: GeneratorSpec,
    pub seed: u64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_budget")]
    pub pair_budget: usize,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_analyses")]
    pub analyses: Vec<Analysis>,
    /// Interval threshold; `None` means 10% of the density maximum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub scaling: ScalingConfig,
    #[serde(default)]
    pub energy: EnergyConfig,
    #[serde(default)]
    pub dimension: DimensionConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

fn default_budget() -> usize {
    DEFAULT_PAIR_BUDGET
}

fn default_analyses() -> Vec<Analysis> {
    vec![Analysis::Density, Analysis::Intervals]
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

impl MapConfig {
    pub fn build(&self) -> Result<ConfigurationMap<f64>, CliError> {
        let params = MapParams {
            d: self.d,
            k: self.k,
            blocks: self.blocks.clone(),
            matrix: self.matrix.clone(),
            n: self.n,
            m: self.m,
        };
        ConfigurationMap::from_name(&self.name, &params).map_err(CliError::from_geometry)
    }
}

/// How a sampled measure is generated. Clouds live on `[0, 1]^dim` and are pushed
/// through the parameter chart when the map side is not a point space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorSpec {
    Uniform {
        n: usize,
        /// Defaults to the dimension of the map side.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<usize>,
        #[serde(default = "zero")]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
    },
    Ifs {
        d: usize,
        m: usize,
        s: f64,
        n: usize,
        #[serde(default = "default_depth")]
        depth: u32,
    },
    Lattice {
        d: usize,
        s: f64,
        n: usize,
        #[serde(default = "default_q")]
        q: usize,
    },
    Product {
        factors: Vec<GeneratorSpec>,
        /// Point budget above which the product is resampled.
        #[serde(default = "default_budget")]
        budget: usize,
    },
}

fn zero() -> f64 {
    0.0
}

fn one() -> f64 {
    1.0
}

fn default_depth() -> u32 {
    12
}

fn default_q() -> usize {
    10
}

impl GeneratorSpec {
    /// Dimension of the generated cloud, resolving `uniform`'s default against `side`.
    pub fn dim(&self, side: Space) -> usize {
        match self {
            GeneratorSpec::Uniform { d, .. } => d.unwrap_or(side.manifold_dim()),
            GeneratorSpec::Ifs { d, .. } | GeneratorSpec::Lattice { d, .. } => *d,
            GeneratorSpec::Product { factors, .. } => {
                // factors are plain clouds, so a defaulted uniform factor has no meaning
                factors.iter().map(|f| f.dim(Space::Euclidean(0))).sum()
            }
        }
    }

    /// Dimension of the measure the generator approximates.
    pub fn nominal_dimension(&self, side: Space) -> f64 {
        match self {
            GeneratorSpec::Uniform { .. } => self.dim(side) as f64,
            GeneratorSpec::Ifs { s, .. } | GeneratorSpec::Lattice { s, .. } => *s,
            GeneratorSpec::Product { factors, .. } => factors
                .iter()
                .map(|f| f.nominal_dimension(Space::Euclidean(0)))
                .sum(),
        }
    }

    fn fill_defaults(&mut self, side: Space) {
        if let GeneratorSpec::Uniform { d, .. } = self {
            if d.is_none() {
                *d = Some(side.manifold_dim());
            }
        }
    }

    fn validate(&self, field: &str) -> Result<(), String> {
        let bad = |what: &str| Err(format!("{field}: {what}"));
        match self {
            GeneratorSpec::Uniform { n, d, lo, hi } => {
                if *n == 0 {
                    return bad("n must be positive");
                }
                if d == &Some(0) {
                    return bad("d must be positive");
                }
                if !(lo < hi) {
                    return bad("lo must be below hi");
                }
            }
            GeneratorSpec::Ifs { n, m, depth, s, .. } => {
                if *n == 0 || *m < 2 || *depth == 0 || !(*s > 0.0) {
                    return bad("ifs needs n >= 1, m >= 2, depth >= 1 and s > 0");
                }
            }
            GeneratorSpec::Lattice { n, q, s, .. } => {
                if *n == 0 || *q == 0 || !(*s > 0.0) {
                    return bad("lattice needs n >= 1, q >= 1 and s > 0");
                }
            }
            GeneratorSpec::Product { factors, budget } => {
                if factors.len() < 2 {
                    return bad("product needs at least two factors");
                }
                if *budget == 0 {
                    return bad("product budget must be positive");
                }
                for (i, f) in factors.iter().enumerate() {
                    if let GeneratorSpec::Uniform { d: None, .. } = f {
                        return Err(format!("{field}.factors[{i}]: uniform factors need d"));
                    }
                    f.validate(&format!("{field}.factors[{i}]"))?;
                }
            }
        }
        Ok(())
    }
}

/// Density grid: `"auto"` (observed range padded by `3 eps`, step `eps / 2`) or explicit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    #[default]
    #[serde(with = "auto_keyword")]
    Auto,
    Explicit {
        lo: Vec<f64>,
        hi: Vec<f64>,
        step: Vec<f64>,
    },
}

mod auto_keyword {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "auto" {
            Ok(())
        } else {
            Err(D::Error::custom(format!("expected \"auto\", found {s:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    Density,
    Intervals,
    Scaling,
    Energy,
    Dimension,
    Decay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    /// Center of the balls; defaults to the middle of the observed range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    /// Geometric bandwidth grid `eps_min ..= eps_max`; defaults to `eps .. 32 eps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_max: Option<f64>,
    #[serde(default = "default_scaling_count")]
    pub count: usize,
}

fn default_scaling_count() -> usize {
    6
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            t: None,
            eps_min: None,
            eps_max: None,
            count: default_scaling_count(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    /// Energy exponent; defaults to 90% of each measure's nominal dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionConfig {
    /// Radius range; chosen from the cloud size and extent when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_max: Option<f64>,
    #[serde(default = "default_radii")]
    pub radii: usize,
    #[serde(default = "default_centers")]
    pub centers: usize,
}

fn default_radii() -> usize {
    7
}

fn default_centers() -> usize {
    200
}

impl Default for DimensionConfig {
    fn default() -> Self {
        Self {
            radius_min: None,
            radius_max: None,
            radii: default_radii(),
            centers: default_centers(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    /// Largest frequency; capped at 90% of the aliasing limit when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_max: Option<f64>,
    #[serde(default = "default_directions")]
    pub directions: usize,
}

fn default_directions() -> usize {
    16
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            xi_max: None,
            directions: default_directions(),
        }
    }
}

/// Parses and validates a configuration document, filling every default.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(text, s.start));
        CliError::Parse {
            line,
            field: None,
            message: e.message().to_string(),
        }
    })?;
    let at = |field: &str, message: String| CliError::Parse {
        line: line_of_key(text, field),
        field: Some(field.to_string()),
        message,
    };
    let map = cfg.map.build()?;
    if !map.is_evaluable() {
        return Err(at(
            "map.name",
            format!("{} cannot be evaluated pointwise", map.label()),
        ));
    }
    if !(cfg.eps > 0.0 && cfg.eps.is_finite()) {
        return Err(at("eps", format!("eps must be positive, got {}", cfg.eps)));
    }
    if cfg.analyses.is_empty() {
        return Err(at("analyses", "at least one analysis is required".into()));
    }
    if let Some(delta) = cfg.delta {
        if !(delta > 0.0) {
            return Err(at("delta", format!("delta must be positive, got {delta}")));
        }
    }
    if let GridConfig::Explicit { lo, hi, step } = &cfg.grid {
        if [lo.len(), hi.len(), step.len()]
            .iter()
            .any(|&l| l != map.k())
        {
            return Err(CliError::DimensionMismatch {
                what: "grid".into(),
                expected: map.k(),
                found: lo.len(),
            });
        }
    }
    if let Some(t) = &cfg.scaling.t {
        if t.len() != map.k() {
            return Err(CliError::DimensionMismatch {
                what: "scaling.t".into(),
                expected: map.k(),
                found: t.len(),
            });
        }
    }
    for (name, spec, side) in [
        ("mu1", &mut cfg.mu1, Side::X),
        ("mu2", &mut cfg.mu2, Side::Y),
    ] {
        spec.validate(name).map_err(|m| at(name, m))?;
        let space = map.space(side);
        spec.fill_defaults(space);
        let found = spec.dim(space);
        if found != space.manifold_dim() {
            return Err(CliError::DimensionMismatch {
                what: format!("{name} ({} of R^{})", space.name(), space.ambient()),
                expected: space.manifold_dim(),
                found,
            });
        }
        if let GeneratorSpec::Ifs { m, depth, .. } = spec {
            // the energy analysis enumerates cylinders; keep the count representable
            if (*m as f64).powi(*depth as i32) > 1e18 {
                return Err(at(name, format!("{m}^{depth} cylinders overflow")));
            }
        }
    }
    Ok(cfg)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `field` (`a.b`), written either dotted or under a `[a]` section.
fn line_of_key(text: &str, field: &str) -> Option<usize> {
    let (section, key) = match field.split_once('.') {
        Some((s, k)) => (Some(s), k),
        None => (None, field),
    };
    let mut current: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = Some(name.trim());
            if section.is_some() && current == section && key.is_empty() {
                return Some(i + 1);
            }
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else {
            continue;
        };
        let lhs = lhs.trim();
        let full = match current {
            Some(sec) => format!("{sec}.{lhs}"),
            None => lhs.to_string(),
        };
        if full == field || (section.is_none() && full.starts_with(&format!("{field}."))) {
            return Some(i + 1);
        }
        if section.is_none() && current == Some(field) {
            return Some(i + 1);
        }
    }
    None
}

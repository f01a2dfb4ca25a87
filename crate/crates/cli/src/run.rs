//! Generators -> diagnostics -> density -> analyses, and the report they produce.

use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use configlab::diagnostics::{
    classify_energy, energy_integral, energy_report, fourier_decay, local_dimension, DecayFit,
    EnergyVerdict,
};
use configlab::fractal::{
    chart_pushforward, falconer_lattice_set, geometric_grid, ifs_with_dimension, product_measure,
    sample_ifs, uniform_box, uniform_on_space, IfsSpec, MeasureMeta, SampledMeasure,
};
use configlab::geometry::{threshold_for, ConfigurationMap, ParameterBox, Side, Space};
use configlab::measure::{
    default_delta, detect_intervals, estimate_density, fit_scaling_exponent, DensityEstimate,
    GridSpec, PairSample, Region, ScalingFit,
};
use configlab::rng::derive_seed;
use log::info;
use serde::{Deserialize, Serialize};

use crate::config::{Analysis, ExperimentConfig, GeneratorSpec, GridConfig};
use crate::error::CliError;

/// Accuracy of the measured local dimension on the reference measures.
pub const MEASURED_DIMENSION_TOLERANCE: f64 = 0.1;
/// Largest cylinder count enumerated for the energy refinement sequence.
const ENERGY_CYLINDERS: f64 = 65_536.0;
/// Energy refinement levels (depths or sample doublings).
const ENERGY_LEVELS: usize = 5;
/// Default `|xi|` ceiling for clouds without positional error.
const DEFAULT_XI_MAX: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub map: String,
    pub k: usize,
    pub threshold: Threshold,
    pub mu1: MeasureSummary,
    pub mu2: MeasureSummary,
    /// Measured when the dimension analysis ran, nominal otherwise.
    pub dimension_sum: f64,
    pub dimension_source: DimensionSource,
    pub dimension_tolerance: f64,
    /// `dimension_sum > threshold`.
    pub above_threshold: bool,
    /// Whether `|dimension_sum - threshold|` exceeds the tolerance.
    pub decisive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensitySummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<IntervalSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<[EnergySummary; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<[DecayFit; 2]>,
    /// Wall-clock stage timings; only recorded on request since they break byte stability.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<Timing>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub exact: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimensionSource {
    Nominal,
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSummary {
    pub generator: String,
    pub points: usize,
    pub coords: usize,
    pub space: Space,
    pub positional_error: f64,
    pub nominal_dimension: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_dimension: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySummary {
    pub eps: f64,
    pub pairs_used: usize,
    pub seed: u64,
    pub grid: GridSpec,
    pub max_value: f64,
    pub riemann_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSummary {
    pub delta: f64,
    pub regions: Vec<Region>,
    pub longest: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelKind {
    Depth,
    Points,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub s: f64,
    pub level_kind: LevelKind,
    pub levels: Vec<u64>,
    pub estimates: Vec<f64>,
    pub relative_changes: Vec<f64>,
    pub verdict: EnergyVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub timings: bool,
}

/// Everything a run produces: the report plus the artifacts written next to it.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub mu1: SampledMeasure<f64>,
    pub mu2: SampledMeasure<f64>,
    pub density: Option<DensityEstimate<f64>>,
}

struct Clock {
    on: bool,
    stages: Vec<Timing>,
    last: Instant,
}

impl Clock {
    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        info!("{stage} done in {:.3} s", (now - self.last).as_secs_f64());
        if self.on {
            self.stages.push(Timing {
                stage: stage.into(),
                seconds: (now - self.last).as_secs_f64(),
            });
        }
        self.last = now;
    }
}

/// Seeds of the independent random streams of one experiment.
mod tags {
    pub const MU1: u64 = 1;
    pub const MU2: u64 = 2;
    pub const PAIRS: u64 = 3;
    pub const ENERGY: u64 = 4;
    pub const DIMENSION: u64 = 5;
    pub const DECAY: u64 = 6;
    pub const FACTORS: u64 = 100;
}

/// Runs a validated configuration; a pure function of `cfg` apart from timings.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentRun, CliError> {
    let mut clock = Clock {
        on: opts.timings,
        stages: Vec::new(),
        last: Instant::now(),
    };
    let map = cfg.map.build()?;
    let threshold = threshold_for(&map).map_err(CliError::from_geometry)?;
    let wants = |a: Analysis| cfg.analyses.contains(&a);

    let sides = [Side::X, Side::Y];
    let specs = [&cfg.mu1, &cfg.mu2];
    let mut clouds = Vec::with_capacity(2);
    for (i, (spec, side)) in specs.iter().zip(sides).enumerate() {
        let tag = [tags::MU1, tags::MU2][i];
        clouds.push(generate(
            spec,
            map.space(side),
            derive_seed(cfg.seed, tag),
            &format!("mu{}", i + 1),
        )?);
    }
    clock.lap("generators");

    let mut summaries: Vec<MeasureSummary> = (0..2)
        .map(|i| MeasureSummary {
            generator: clouds[i].meta().generator.clone(),
            points: clouds[i].len(),
            coords: clouds[i].dim(),
            space: map.space(sides[i]),
            positional_error: clouds[i].positional_error(),
            nominal_dimension: specs[i].nominal_dimension(map.space(sides[i])),
            measured_dimension: None,
            radii: None,
        })
        .collect();

    let energy = if wants(Analysis::Energy) {
        let mut out = Vec::with_capacity(2);
        for i in 0..2 {
            let s = cfg.energy.s.unwrap_or(0.9 * summaries[i].nominal_dimension);
            let ifs = match specs[i] {
                GeneratorSpec::Ifs {
                    d,
                    m,
                    s: dim,
                    depth,
                    ..
                } if map.space(sides[i]).is_euclidean() => Some((
                    ifs_with_dimension::<f64>(*d, *m, *dim).map_err(CliError::numerical("ifs"))?,
                    *depth,
                )),
                _ => None,
            };
            let seed = derive_seed(cfg.seed, tags::ENERGY + 10 * i as u64);
            let context = format!("energy of mu{}", i + 1);
            out.push(match ifs {
                Some((spec, depth)) => {
                    energy_by_depth(&spec, depth, s, cfg.pair_budget, seed, &context)?
                }
                None => energy_by_doubling(&clouds[i], s, cfg.pair_budget, seed, &context)?,
            });
        }
        clock.lap("energy");
        Some([out[0].clone(), out[1].clone()])
    } else {
        None
    };

    let mut source = DimensionSource::Nominal;
    if wants(Analysis::Dimension) {
        for i in 0..2 {
            let context = format!("dimension of mu{}", i + 1);
            let radii =
                dimension_radii(cfg, &clouds[i], summaries[i].nominal_dimension).map_err(|m| {
                    CliError::Numerical {
                        context: context.clone(),
                        message: m,
                    }
                })?;
            let seed = derive_seed(cfg.seed, tags::DIMENSION + 10 * i as u64);
            let d = local_dimension(&clouds[i], &radii, cfg.dimension.centers, seed)
                .map_err(CliError::numerical(&context))?;
            summaries[i].measured_dimension = Some(d);
            summaries[i].radii = Some(radii);
        }
        source = DimensionSource::Measured;
        clock.lap("dimension");
    }

    let decay = if wants(Analysis::Decay) {
        let mut out = Vec::with_capacity(2);
        for (i, cloud) in clouds.iter().enumerate() {
            let err = cloud.positional_error();
            let xi_max = cfg.decay.xi_max.unwrap_or(if err > 0.0 {
                DEFAULT_XI_MAX.min(0.45 / err)
            } else {
                DEFAULT_XI_MAX
            });
            let seed = derive_seed(cfg.seed, tags::DECAY + 10 * i as u64);
            out.push(
                fourier_decay(cloud, xi_max, cfg.decay.directions, seed)
                    .map_err(CliError::numerical(&format!("decay of mu{}", i + 1)))?,
            );
        }
        clock.lap("decay");
        Some([out[0].clone(), out[1].clone()])
    } else {
        None
    };

    let pair_seed = derive_seed(cfg.seed, tags::PAIRS);
    let density = if wants(Analysis::Density) || wants(Analysis::Intervals) {
        let grid = match &cfg.grid {
            GridConfig::Auto => None,
            GridConfig::Explicit { lo, hi, step } => Some(
                GridSpec::new(lo.clone(), hi.clone(), step.clone())
                    .map_err(CliError::numerical("grid"))?,
            ),
        };
        let est = estimate_density(
            &map,
            &clouds[0],
            &clouds[1],
            cfg.eps,
            grid.as_ref(),
            cfg.pair_budget,
            pair_seed,
        )
        .map_err(CliError::numerical("density"))?;
        clock.lap("density");
        Some(est)
    } else {
        None
    };

    let intervals = match (&density, wants(Analysis::Intervals)) {
        (Some(est), true) => {
            let delta = cfg.delta.unwrap_or_else(|| default_delta(est));
            let regions = detect_intervals(est, delta);
            let longest = regions.iter().map(Region::length).fold(0.0, f64::max);
            Some(IntervalSummary {
                delta,
                regions,
                longest,
            })
        }
        _ => None,
    };

    let scaling = if wants(Analysis::Scaling) {
        let fit = scaling(cfg, &map, &clouds, pair_seed)?;
        clock.lap("scaling");
        Some(fit)
    } else {
        None
    };

    let dims: Vec<f64> = summaries
        .iter()
        .map(|s| s.measured_dimension.unwrap_or(s.nominal_dimension))
        .collect();
    let dimension_sum = dims[0] + dims[1];
    let threshold_value = *threshold.numer() as f64 / *threshold.denom() as f64;
    let tolerance = match source {
        DimensionSource::Measured => MEASURED_DIMENSION_TOLERANCE,
        DimensionSource::Nominal => 0.0,
    };
    let [mu2_summary, mu1_summary]: [MeasureSummary; 2] =
        [summaries.pop().unwrap(), summaries.pop().unwrap()];
    let report = ExperimentReport {
        config: cfg.clone(),
        map: map.label(),
        k: map.k(),
        threshold: Threshold {
            exact: threshold.to_string(),
            value: threshold_value,
        },
        mu1: mu1_summary,
        mu2: mu2_summary,
        dimension_sum,
        dimension_source: source,
        dimension_tolerance: tolerance,
        above_threshold: dimension_sum > threshold_value,
        decisive: (dimension_sum - threshold_value).abs() > tolerance,
        density: density.as_ref().map(|est| DensitySummary {
            eps: est.eps,
            pairs_used: est.pairs_used,
            seed: est.seed,
            grid: est.grid.clone(),
            max_value: est.max_value(),
            riemann_sum: est.riemann_sum(),
        }),
        intervals,
        scaling,
        energy,
        decay,
        timings: opts.timings.then_some(clock.stages),
    };
    let [mu1, mu2]: [SampledMeasure<f64>; 2] = clouds.try_into().expect("two clouds");
    Ok(ExperimentRun {
        report,
        mu1,
        mu2,
        density,
    })
}

fn generate(
    spec: &GeneratorSpec,
    space: Space,
    seed: u64,
    name: &str,
) -> Result<SampledMeasure<f64>, CliError> {
    let bounds = ParameterBox::unit_cube();
    if let (GeneratorSpec::Uniform { n, .. }, false) = (spec, space.is_euclidean()) {
        return Ok(uniform_on_space(space, *n, seed, &bounds));
    }
    let cloud = cloud(spec, seed, name)?;
    if space.is_euclidean() {
        Ok(cloud)
    } else {
        chart_pushforward(&cloud, space, &bounds).map_err(CliError::numerical(name))
    }
}

/// The generator's point cloud in its own coordinates.
fn cloud(spec: &GeneratorSpec, seed: u64, name: &str) -> Result<SampledMeasure<f64>, CliError> {
    let err = CliError::numerical(name);
    Ok(match spec {
        GeneratorSpec::Uniform { n, d, lo, hi } => {
            uniform_box(d.expect("defaults filled"), *n, *lo, *hi, seed)
        }
        GeneratorSpec::Ifs { d, m, s, n, depth } => {
            let ifs = ifs_with_dimension::<f64>(*d, *m, *s).map_err(&err)?;
            sample_ifs(&ifs, *depth, *n, seed).map_err(&err)?
        }
        GeneratorSpec::Lattice { d, s, n, q } => {
            falconer_lattice_set(*d, *s, *q, *n, seed).map_err(&err)?
        }
        GeneratorSpec::Product { factors, budget } => {
            let mut acc = cloud(&factors[0], derive_seed(seed, tags::FACTORS), name)?;
            for (i, f) in factors.iter().enumerate().skip(1) {
                let next = cloud(f, derive_seed(seed, tags::FACTORS + i as u64), name)?;
                acc = product_measure(&acc, &next, *budget, derive_seed(seed, i as u64))
                    .map_err(&err)?;
            }
            acc
        }
    })
}

fn energy_by_depth(
    spec: &IfsSpec<f64>,
    depth: u32,
    s: f64,
    budget: usize,
    seed: u64,
    context: &str,
) -> Result<EnergySummary, CliError> {
    let cap = (ENERGY_CYLINDERS.ln() / (spec.m() as f64).ln()).floor() as u32;
    let top = depth.min(cap).max(ENERGY_LEVELS as u32);
    let depths: Vec<u32> = (top + 1 - ENERGY_LEVELS as u32..=top).collect();
    let r = energy_report(spec, s, &depths, budget, seed).map_err(CliError::numerical(context))?;
    Ok(EnergySummary {
        s,
        level_kind: LevelKind::Depth,
        levels: r.depths.iter().map(|&d| u64::from(d)).collect(),
        estimates: r.estimates,
        relative_changes: r.relative_changes,
        verdict: r.verdict,
    })
}

/// Energies of the first `n / 2^j` points, `j = 4, ..., 0`.
fn energy_by_doubling(
    mu: &SampledMeasure<f64>,
    s: f64,
    budget: usize,
    seed: u64,
    context: &str,
) -> Result<EnergySummary, CliError> {
    let n = mu.len();
    let mut levels = Vec::new();
    let mut estimates = Vec::new();
    for j in (0..ENERGY_LEVELS).rev() {
        let m = n >> j;
        if m < 2 {
            continue;
        }
        let mut meta = MeasureMeta::new(mu.meta().generator.clone(), mu.meta().seed);
        meta.positional_error = mu.positional_error();
        let prefix =
            SampledMeasure::uniform_weights(mu.dim(), mu.coords()[..m * mu.dim()].to_vec(), meta)
                .map_err(CliError::numerical(context))?;
        estimates
            .push(energy_integral(&prefix, s, budget, seed).map_err(CliError::numerical(context))?);
        levels.push(m as u64);
    }
    Ok(EnergySummary {
        s,
        level_kind: LevelKind::Points,
        levels,
        relative_changes: estimates.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect(),
        verdict: classify_energy(&estimates),
        estimates,
    })
}

/// Configured radii, or three octaves starting at the radius whose ball holds about
/// 10 points when mass scales as `(r / diam)^dim` (an underestimate for solid sets),
/// capped at `diam / 4`.
fn dimension_radii(
    cfg: &ExperimentConfig,
    mu: &SampledMeasure<f64>,
    nominal: f64,
) -> Result<Vec<f64>, String> {
    let (lo, hi) = mu.bounds();
    let diam = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| (b - a).powi(2))
        .sum::<f64>()
        .sqrt();
    let by_count = diam * (10.0 / mu.len() as f64).powf(1.0 / nominal.max(1e-3));
    let auto_min = by_count.max(10.0 * mu.positional_error());
    let r_min = cfg.dimension.radius_min.unwrap_or(auto_min);
    let r_max = cfg
        .dimension
        .radius_max
        .unwrap_or_else(|| (8.0 * r_min).min(diam / 4.0));
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(format!(
            "cannot choose radii in ({r_min}, {r_max}); set dimension.radius_min/max"
        ));
    }
    Ok(geometric_grid(r_min, r_max, cfg.dimension.radii))
}

fn scaling(
    cfg: &ExperimentConfig,
    map: &ConfigurationMap<f64>,
    clouds: &[SampledMeasure<f64>],
    seed: u64,
) -> Result<ScalingFit, CliError> {
    let err = CliError::numerical("scaling");
    let t = match &cfg.scaling.t {
        Some(t) => t.clone(),
        None => {
            let pairs = PairSample::draw(map, &clouds[0], &clouds[1], cfg.pair_budget, seed)
                .map_err(&err)?;
            let (lo, hi) = pairs.observed_range().ok_or_else(|| CliError::Numerical {
                context: "scaling".into(),
                message: "no nonsingular pairs".into(),
            })?;
            lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
        }
    };
    let e0 = cfg.scaling.eps_min.unwrap_or(cfg.eps);
    let e1 = cfg.scaling.eps_max.unwrap_or(32.0 * e0);
    if !(e0 > 0.0 && e1 > e0) {
        return Err(CliError::Numerical {
            context: "scaling".into(),
            message: format!("bandwidth range ({e0}, {e1}) is empty"),
        });
    }
    let grid = geometric_grid(e0, e1, cfg.scaling.count);
    fit_scaling_exponent(
        map,
        &clouds[0],
        &clouds[1],
        &t,
        &grid,
        cfg.pair_budget,
        seed,
    )
    .map_err(err)
}

/// Writes `report.json`, `measure_mu1.txt`, `measure_mu2.txt` and, when a density
/// was computed, `density.csv` with its `density.json` sidecar.
pub fn write_outputs(run: &ExperimentRun, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let json =
        serde_json::to_string_pretty(&run.report).map_err(|e| CliError::Internal(e.to_string()))?;
    fs::write(dir.join("report.json"), json + "\n")?;
    run.mu1.write_text(BufWriter::new(fs::File::create(
        dir.join("measure_mu1.txt"),
    )?))?;
    run.mu2.write_text(BufWriter::new(fs::File::create(
        dir.join("measure_mu2.txt"),
    )?))?;
    if let Some(est) = &run.density {
        est.write_csv(BufWriter::new(fs::File::create(dir.join("density.csv"))?))?;
        let side = serde_json::to_string_pretty(&est.sidecar())
            .map_err(|e| CliError::Internal(e.to_string()))?;
        fs::write(dir.join("density.json"), side + "\n")?;
    }
    Ok(())
}

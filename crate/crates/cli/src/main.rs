use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use configlab_cli::config::{
    DecayConfig, DimensionConfig, EnergyConfig, MapConfig, ScalingConfig, DEFAULT_EPS,
    DEFAULT_PAIR_BUDGET,
};
use configlab_cli::tables::{render_catalog, render_thresholds};
use configlab_cli::{
    cmd_catalog, cmd_thresholds, parse_config, run_experiment, write_outputs, Analysis, CliError,
    ExperimentConfig, ExperimentReport, GeneratorSpec, GridConfig, RunOptions,
};
use log::info;

const DEFAULT_OUT: &str = "configlab-out";

#[derive(Parser)]
#[command(
    name = "configlab",
    version,
    about = "Configuration sets of fractal measures"
)]
struct Cli {
    /// Experiment file; runs it when no subcommand is given.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of the experiment.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (default: the config's `output`, else ./configlab-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Records stage timings in the report (which then differs between runs).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Dimension thresholds of the cataloged maps.
    Thresholds {
        #[arg(long)]
        json: bool,
    },
    /// Cataloged maps with their parameter spaces.
    Catalog {
        #[arg(long)]
        json: bool,
    },
    /// Runs an experiment file.
    Run { file: Option<PathBuf> },
    /// Configuration density of two generated measures.
    Density {
        #[arg(long)]
        map: String,
        #[arg(long)]
        d: Option<usize>,
        /// Generator, e.g. `uniform:n=1000` or `ifs:d=1,m=2,s=0.63,n=100000`.
        #[arg(long)]
        mu1: String,
        #[arg(long)]
        mu2: String,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[command(flatten)]
        common: Common,
    },
    /// s-energy refinement sequence of one measure.
    Energy {
        #[arg(long)]
        mu: String,
        #[arg(long)]
        s: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Local dimension of one measure.
    Dimension {
        #[arg(long)]
        mu: String,
        #[arg(long)]
        radius_min: Option<f64>,
        #[arg(long)]
        radius_max: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Fourier decay exponent of one measure.
    Decay {
        #[arg(long)]
        mu: String,
        #[arg(long)]
        xi_max: Option<f64>,
        #[arg(long, default_value_t = 16)]
        directions: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = DEFAULT_PAIR_BUDGET)]
    pair_budget: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CONFIGLAB_LOG", "warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let opts = RunOptions {
        timings: cli.timings,
    };
    let out = cli.out.clone();
    let cfg = match cli.command {
        Some(Command::Thresholds { json }) => {
            let rows = cmd_thresholds();
            print_listing(json, &rows, || render_thresholds(&rows));
            return Ok(());
        }
        Some(Command::Catalog { json }) => {
            let entries = cmd_catalog();
            print_listing(json, &entries, || render_catalog(&entries));
            return Ok(());
        }
        None | Some(Command::Run { file: None }) => match &cli.config {
            Some(path) => load(path)?,
            None => {
                return Err(CliError::Parse {
                    line: None,
                    field: None,
                    message: "no experiment given; pass --config <file> or `run <file>`".into(),
                })
            }
        },
        Some(Command::Run { file: Some(path) }) => load(&path)?,
        Some(Command::Density {
            map,
            d,
            mu1,
            mu2,
            eps,
            common,
        }) => {
            let map = MapConfig {
                name: map,
                d,
                ..MapConfig::default()
            };
            let mut cfg = shortcut(
                map,
                generator(&mu1)?,
                generator(&mu2)?,
                Analysis::Density,
                &common,
            );
            cfg.eps = eps;
            cfg.analyses.push(Analysis::Intervals);
            cfg
        }
        Some(Command::Energy { mu, s, common }) => {
            let mut cfg = single(&mu, Analysis::Energy, &common)?;
            cfg.energy = EnergyConfig { s };
            cfg
        }
        Some(Command::Dimension {
            mu,
            radius_min,
            radius_max,
            common,
        }) => {
            let mut cfg = single(&mu, Analysis::Dimension, &common)?;
            cfg.dimension.radius_min = radius_min;
            cfg.dimension.radius_max = radius_max;
            cfg
        }
        Some(Command::Decay {
            mu,
            xi_max,
            directions,
            common,
        }) => {
            let mut cfg = single(&mu, Analysis::Decay, &common)?;
            cfg.decay = DecayConfig { xi_max, directions };
            cfg
        }
    };
    let mut cfg = cfg;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    // re-validate so shortcut configs get the same checks and defaults as files
    let cfg = parse_config(&toml::to_string(&cfg).map_err(|e| CliError::Internal(e.to_string()))?)?;
    let dir = out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    info!("running {} into {}", cfg.map.name, dir.display());
    let run = run_experiment(&cfg, opts)?;
    write_outputs(&run, &dir)?;
    print!("{}", summary(&run.report));
    Ok(())
}

fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse {
        line: None,
        field: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_config(&text)
}

fn print_listing<T: serde::Serialize>(json: bool, rows: &T, text: impl FnOnce() -> String) {
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(rows).expect("serializable")
        );
    } else {
        print!("{}", text());
    }
}

/// Parses `kind:key=value,...` into a generator spec.
fn generator(spec: &str) -> Result<GeneratorSpec, CliError> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut doc = format!("kind = {kind:?}\n");
    for pair in rest.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = pair.split_once('=').ok_or_else(|| CliError::Parse {
            line: None,
            field: Some(spec.into()),
            message: format!("expected key=value, found {pair:?}"),
        })?;
        let v = v.trim();
        let value = if v.parse::<f64>().is_ok() {
            v.to_string()
        } else {
            format!("{v:?}")
        };
        doc.push_str(&format!("{} = {value}\n", k.trim()));
    }
    toml::from_str(&doc).map_err(|e| CliError::Parse {
        line: None,
        field: Some(spec.into()),
        message: e.message().to_string(),
    })
}

fn shortcut(
    map: MapConfig,
    mu1: GeneratorSpec,
    mu2: GeneratorSpec,
    analysis: Analysis,
    common: &Common,
) -> ExperimentConfig {
    ExperimentConfig {
        map,
        mu1,
        mu2,
        seed: 0,
        eps: DEFAULT_EPS,
        pair_budget: common.pair_budget,
        grid: GridConfig::Auto,
        analyses: vec![analysis],
        delta: None,
        scaling: ScalingConfig::default(),
        energy: EnergyConfig::default(),
        dimension: DimensionConfig::default(),
        decay: DecayConfig::default(),
        output: None,
    }
}

/// Single-measure analyses run on the difference map with `mu1 = mu2`.
fn single(mu: &str, analysis: Analysis, common: &Common) -> Result<ExperimentConfig, CliError> {
    let spec = generator(mu)?;
    let d = spec.dim(configlab::geometry::Space::Euclidean(1));
    let map = MapConfig {
        name: "difference".into(),
        d: Some(d),
        ..MapConfig::default()
    };
    Ok(shortcut(map, spec.clone(), spec, analysis, common))
}

fn summary(r: &ExperimentReport) -> String {
    let mut s = format!(
        "map {}: threshold {} ({:.4}), dimension sum {:.4} ({:?}, tolerance {}) -> {}\n",
        r.map,
        r.threshold.exact,
        r.threshold.value,
        r.dimension_sum,
        r.dimension_source,
        r.dimension_tolerance,
        if r.above_threshold {
            "above threshold"
        } else {
            "below threshold"
        },
    );
    for (name, m) in [("mu1", &r.mu1), ("mu2", &r.mu2)] {
        s += &format!("{name}: {} ({} points", m.generator, m.points);
        if let Some(d) = m.measured_dimension {
            s += &format!(", local dimension {d:.4}");
        }
        s += ")\n";
    }
    if let Some(d) = &r.density {
        s += &format!(
            "density: {} pairs, max {:.4}, mass {:.4}\n",
            d.pairs_used, d.max_value, d.riemann_sum
        );
    }
    if let Some(iv) = &r.intervals {
        s += &format!(
            "intervals: {} regions at delta {:.4}, longest {:.4}\n",
            iv.regions.len(),
            iv.delta,
            iv.longest
        );
    }
    if let Some(f) = &r.scaling {
        s += &format!(
            "scaling: slope {:.4} (k = {}), C_phi max {:.4}\n",
            f.slope, f.k, f.c_phi_max
        );
    }
    if let Some([a, b]) = &r.energy {
        s += &format!(
            "energy: mu1 {:?} at s={}, mu2 {:?} at s={}\n",
            a.verdict, a.s, b.verdict, b.s
        );
    }
    if let Some([a, b]) = &r.decay {
        s += &format!("decay: mu1 {:.4}, mu2 {:.4}\n", a.exponent, b.exponent);
    }
    s
}

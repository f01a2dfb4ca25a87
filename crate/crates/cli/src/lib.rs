//! Config-driven experiments on configuration sets of fractal measures.

// `!(x > 0.0)` guards deliberately reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod run;
pub mod tables;

pub use config::{parse_config, Analysis, ExperimentConfig, GeneratorSpec, GridConfig};
pub use error::CliError;
pub use run::{run_experiment, write_outputs, ExperimentReport, ExperimentRun, RunOptions};
pub use tables::{cmd_catalog, cmd_thresholds};

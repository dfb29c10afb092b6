//! Configuration, CSV/SVG output and experiment runners for the `matdyn`
//! command-line tool.

pub mod config;
pub mod output;
pub mod repro;
pub mod run;
pub mod svg;

pub use config::{load_config, parse_config, ConfigError, Experiment, ExperimentConfig};
pub use run::{run_experiment, RunError, RunOutput};

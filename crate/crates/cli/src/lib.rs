//! Experiment driver for the `supercsp` engines.
//!
//! Configs are TOML files with a strict schema. `run` executes one
//! experiment or a bundle and writes `results.csv` plus `summary.json` per
//! experiment directory; `compare` cross-checks the classifier against the
//! maximal-solution engine on a fixture set.

pub mod app;
pub mod compare;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use app::{compare_command, run_command, run_one, RunOptions};
pub use compare::{compare_engines, CompareReport, CompareRow};
pub use config::{load_config, Bundle, CompareConfig, ConfigFile, Experiment, ExperimentConfig, Numerics};
pub use error::{CliError, CliResult};
pub use experiments::{run_experiment, Outcome, Report};
pub use output::Format;

//! Experiment runner for `passage-core`: TOML configs with figure presets,
//! parallel deterministic ensembles, CSV/JSONL output and run manifests.

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{parse_experiment, parse_experiment_as, ExperimentKind, ExperimentSpec};
pub use error::{Error, Result};
pub use run::{execute, run_experiment};

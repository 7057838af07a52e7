//! Experiment runner for projected gradient flows: config loading, runs,
//! parameter sweeps and pre-flight checks.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod presets;

pub use commands::{Options, EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK, EXIT_VERDICT};
pub use config::{ConfigError, ExperimentConfig, RawConfig, SweepParam};
pub use experiment::{run_experiment, Outcome};

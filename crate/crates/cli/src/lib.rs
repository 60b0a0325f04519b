//! Batch runner for the `dicke` simulator: experiment configs in, traces,
//! density matrices, reconstructions and certification reports out.

pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod run;

pub use config::{DeviceSpec, Experiment, ExperimentConfig, StateSource, TauGrid};
pub use error::{CliError, CliResult};
pub use manifest::RunManifest;

//! Config-driven experiment driver for the spectral ROM pipeline.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod repro;
pub mod setup;
pub mod verify;

pub use commands::{run, Command};
pub use config::ExperimentConfig;
pub use error::CliError;

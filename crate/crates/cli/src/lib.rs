//! Command-line lab for grid entropy experiments: configuration, file
//! formats, parallel ladder runs, plots and the acceptance suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod plot;
pub mod runs;
pub mod spec;
pub mod verify;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};

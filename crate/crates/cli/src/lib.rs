//! Experiment harness around `swim-core`: run configuration, training,
//! ablation sweeps and plotting.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod plot;
pub mod train;

pub use config::RunConfig;
pub use error::{CliError, CliResult};

//! Command-line front end for `sdestab-core`: experiment configs, desk-scale
//! figure reproductions and CSV output.

pub mod app;
pub mod config;
pub mod csv;
pub mod error;
pub mod experiments;
pub mod manifest;

pub use config::{Experiment, ExperimentConfig};
pub use error::CliError;

//! Experiment driver for the LSE precoder library: replica sweeps,
//! finite-size comparisons, antenna-saving tables and SVG plots.

pub mod config;
mod error;
pub mod plot;
pub mod run;
pub mod table;

pub use config::{ExperimentConfig, Mode};
pub use error::{Error, Result};

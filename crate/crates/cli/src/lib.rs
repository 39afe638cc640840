//! Experiment runner for the localizing-event simulator: strict JSON configs
//! in, CSV tables and JSON run records out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod demo;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_config, ExperimentConfig, Kind};
pub use error::CliError;
pub use output::RunRecord;

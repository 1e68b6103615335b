//! Experiment runner: config parsing, analysis execution and report output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod runner;

pub use config::{Analysis, ConfigError, RunConfig};
pub use runner::{run, RunOutcome};

//! Experiment harness for the fingerloc toolkit: scenario simulation,
//! learning, localization, tracking, lighting control and reports for the
//! four studies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bems;
pub mod classroom;
pub mod commands;
pub mod common;
pub mod config;
pub mod data;
pub mod defaults;
pub mod error;
pub mod illegal;
pub mod report;
pub mod wifi;

pub use config::{ExperimentConfig, Pipeline};
pub use error::CliError;

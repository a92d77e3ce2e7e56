//! Experiment driver for the `pgpr` command: configuration, scans, and the
//! CSV, SVG and text artifacts they produce.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod svg;
pub mod table;

pub use config::{Mode, RunConfig};
pub use error::CliError;

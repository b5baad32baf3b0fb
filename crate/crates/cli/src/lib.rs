//! Command-line front end for the cvtp simulator: config parsing,
//! experiment orchestration and run persistence.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::{CliError, CliResult};

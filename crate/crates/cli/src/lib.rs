//! Command-line front end: configuration, reports, plots and subcommands.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod report;

pub use error::{CliError, CliResult};

//! Command-line driver for `advreg`: fitting, regularization paths,
//! thresholds, data generation and feature sweeps, each output paired with
//! a manifest that reproduces it.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;

pub use args::{Cli, Command};
pub use commands::run;
pub use error::{CliError, CliResult};

//! Command-line experiment drivers for the `analog-dist` library.

pub mod args;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod output;

pub use error::{CliError, CliResult};

//! File formats, run manifests and the `specem` command line on top of `specem-core`.

pub mod cli;
pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;

pub use commands::{run, CliError};
pub use error::IoError;

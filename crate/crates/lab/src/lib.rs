//! IO, configuration, and the experiment runner for `calderon-core`.

pub mod config;
pub mod io;
pub mod manifest;
pub mod run;

pub use run::{run, RunError, Subcommand};

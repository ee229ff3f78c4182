//! Batch front end: config parsing and the subcommands behind the `retirement` binary.

pub mod commands;
pub mod config;

pub use commands::{run, Command, Report, RunOptions};
pub use config::RunConfig;

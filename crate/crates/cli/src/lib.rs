//! Configuration parsing and subcommands behind the `nvsqueeze` binary.

pub mod commands;
pub mod config;

pub use commands::{run, CliError, Command, Context, Outcome};

//! Command-line front end and HTTP service for the carving renderer.

pub mod commands;
pub mod registry;
pub mod service;

pub use commands::{run, Cli, CliError, Command};

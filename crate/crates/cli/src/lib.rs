//! Command line entry point and HTTP service.

pub mod cli;
pub mod service;

pub use cli::{cli_main, load_annotated, CliError};

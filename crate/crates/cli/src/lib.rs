//! Experiment harness behind the `logcount` command-line tool.
//!
//! Every subcommand reads a versioned JSON config, runs a deterministic
//! experiment from a master seed and writes plot-ready CSV or JSON whose
//! header records the config hash and seed.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod output;

pub use commands::{execute, Command, Output};
pub use error::{HarnessError, Result};

//! Experiment driver around `dmlab-core`: TOML configuration, the
//! subcommands, CSV/JSON output and the determinism hash.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

pub use commands::{run, Command};
pub use config::RunConfig;
pub use error::CliError;
pub use report::RunReport;

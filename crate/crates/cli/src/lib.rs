//! Command-line front end for `ncgeom`.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{run_command, ConfigError};
pub use config::{Cli, RunConfig};
pub use report::Report;

//! Configuration, reports and subcommands of the `ellipcert` tool.

pub mod config;
pub mod report;
pub mod run;

pub use config::{parse_config, ConfigError, RunConfig};
pub use run::{run, Command, Outcome, RunError};

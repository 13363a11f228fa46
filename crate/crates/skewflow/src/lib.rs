//! Command-line driver for `skewflow-core`: configuration files, the builtin
//! registry, and CSV/text output.

pub mod config;
pub mod demo;
pub mod format;
pub mod registry;
pub mod run;

pub use config::{load_config, parse_config, parse_config_with, parse_system, Command, ConfigError, RunConfig};
pub use run::{run_command, Outcome, RunError};

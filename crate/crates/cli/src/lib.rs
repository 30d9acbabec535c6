//! Scenario files in, plot-ready CSV out.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

pub use commands::{run, Command, Overrides, RunReport};
pub use error::CliError;
pub use scenario::{parse_scenario, Scenario};

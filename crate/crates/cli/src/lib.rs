//! Library side of the `wpb` command: configuration, scenario runs and output writing.

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod scenarios;

pub use config::{parse_config, parse_config_str, Scenario, ScenarioConfig};
pub use error::CliError;
pub use scenarios::{run_scenario, spectrum, RunOptions, RunReport};

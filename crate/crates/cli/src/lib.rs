//! Scenario parsing, presets and the experiment runner behind the `beamkit`
//! command.

pub mod config;
pub mod runner;

pub use config::{parse_config, preset, ConfigError, Method, Mode, Scenario, PRESETS};
pub use runner::{run, to_csv, write_csv, Output};

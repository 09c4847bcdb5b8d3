//! Command-line front end: scenario files, output formats and subcommands.

pub mod commands;
pub mod output;
pub mod scenario_file;

pub use commands::{run_cli, simulate_scenario, Exit, SimOutcome};
pub use scenario_file::{
    load_scenario, parse_scenario, parse_scenario_str, Monitors, ScenarioFile,
};

//! Batch front end for the good-deal bound engine: JSON scenario files in,
//! CSV rows, plot data and a text summary out.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::ScenarioConfig;
pub use error::{CliError, Result};
pub use output::{csv_string, emit_plot_data, write_csv, write_csv_file};
pub use run::{describe, run_scenario, Row, ScenarioOutput, Summary};

//! Command-line front end of the coherence-transfer toolkit: config parsing,
//! scenario dispatch and result tables.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_config, to_json, OutputFormat, RunConfig, Scenario};
pub use error::{CliError, CliResult};
pub use output::{emit_csv, emit_json, format_number, render};
pub use run::{run, RunResult};

//! Configuration, datasets and the scenario runner behind the `afc` binary.

pub mod config;
pub mod dataset;
mod run;

pub use config::{ExperimentConfig, ScenarioKind, FORMAT_VERSION};
pub use dataset::{read_table, write_table, Schema, Table};
pub use run::{run, OutputFile, RunReport, REPORT_FILE, RESULTS_FILE};

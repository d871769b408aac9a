//! Seeded benchmark harness: configuration, repeated runs and reports.

mod config;
mod pipeline;
mod run;

pub use config::{CsvSource, DataSource, ExperimentConfig, SyntheticSource};
pub use pipeline::{estimate_all, prepare, run_method, EstimatorConfigs, Prepared, Preprocess};
pub use run::{run, MethodAggregate, MethodResult, RepeatRecord, RunReport, REPORT_FORMAT};

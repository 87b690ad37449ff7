//! Experiment harness: configuration, drivers for the accuracy, complexity,
//! multi-right-hand-side and frequency studies, and CSV / JSON reports.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{Experiment, ExperimentConfig, SolverKind};
pub use experiments::{fit_exponent, relative_error, run, with_threads};
pub use report::{Outcome, RunReport, Table, Value};

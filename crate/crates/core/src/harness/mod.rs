//! Experiment orchestration: typed configs, verification suites, reports,
//! and CSV/JSON artifacts.

pub mod config;
pub mod io;
pub mod report;
pub mod suites;

pub use config::ExperimentConfig;
pub use report::{Check, Report};

//! Experiment harness: configuration, sweeps, slope fits and output writers.

pub mod config;
pub mod experiment;
pub mod fit;
pub mod output;
pub mod tasks;

pub use config::ExperimentConfig;
pub use experiment::{run_gamma_limit_experiment, ExperimentReport, SweepRow};
pub use fit::{fit_loglog_slope, LogLogFit};

//! Closed-loop benchmark for `sogp-core`: experiment configuration, the
//! simulation runner, metrics, CSV and snapshot files, and the invariant
//! self-test behind the `sogp-bench` binary.

pub mod compare;
pub mod config;
pub mod csv_out;
mod error;
pub mod experiment;
pub mod metrics;
pub mod selftest;
pub mod snapshot;

pub use config::{EstimatorKind, ExperimentConfig, Scheme};
pub use error::{BenchError, Result};
pub use experiment::{run_experiment, run_with_bank, RunMetrics, Task};

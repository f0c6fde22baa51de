//! Benchmark harness: scenarios, metrics, file formats, plots and the
//! commands behind the `ncpf-bench` binary.

pub mod commands;
pub mod io;
pub mod metrics;
pub mod plot;
pub mod scenario;

pub use commands::{cmd_compare, cmd_plot, cmd_run, cmd_simulate, Method, RunOptions};
pub use metrics::{compute_metrics, MetricsReport};
pub use scenario::{Scenario, SEED_ENV};

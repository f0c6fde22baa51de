//! Sparse state estimation under quadratic measurement equations.
//!
//! The crate implements a nonlinear compressive particle filter: a particle
//! filter whose particles live only on an estimated support, combined with a
//! lifted semidefinite relaxation that detects when a new state element has
//! become nonzero. Two comparison methods (a full-state particle filter and
//! per-step sparse recovery) and a benchmark harness are included.
//!
//! Module map:
//!
//! - [`numerics`]: eigendecomposition, PSD projection, Cholesky, Gaussian
//!   densities, counter-based RNG streams.
//! - [`model`]: quadratic measurement map, support dynamics, process model,
//!   trajectory simulation.
//! - [`particle`]: support-aware particle cloud and its update operations.
//! - [`sdp`]: splitting solver for the trace-regularized least-squares SDPs.
//! - [`qbp`]: lifting, masked candidate solves, support detection, full
//!   quadratic basis pursuit.
//! - [`filter`]: the filter driver with support addition, removal and rollback.
//! - [`baselines`]: full-state particle filter and per-step sparse recovery.
//! - [`bench`]: scenarios, metrics, CSV/JSON/SVG output and the commands
//!   behind the `ncpf-bench` binary.

pub mod baselines;
pub mod bench;
pub mod error;
pub mod filter;
pub mod model;
pub mod numerics;
pub mod particle;
pub mod qbp;
pub mod sdp;

pub use error::{Error, Result};

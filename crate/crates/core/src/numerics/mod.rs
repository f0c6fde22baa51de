//! Dense numeric kernels: symmetric eigendecomposition, PSD projection,
//! Cholesky factorization, Gaussian densities and counter-based RNG streams.
//!
//! Matrices here are small (order ≤ 64), so everything is plain dense
//! row-major storage.

mod cholesky;
mod eigen;
mod gaussian;
mod matrix;
mod rng;

pub use cholesky::{
    backward_substitute_transposed, cholesky, cholesky_solve, forward_substitute,
    semidefinite_factor,
};
pub use eigen::{
    psd_project, symmetric_eigendecomposition, symmetric_eigendecomposition_warm, PsdProjector,
    SymmetricEigen, MAX_SWEEPS,
};
pub use gaussian::{gaussian_logpdf, gaussian_sample, weighted_sq_norm, Covariance};
pub use matrix::{dot, norm2, Matrix, SymmetricMatrix};
pub use rng::{stream_id, RngStream};

//! Gaussian densities, sampling, and covariance-weighted norms.

use std::f64::consts::PI;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::cholesky::{cholesky, forward_substitute, semidefinite_factor};
use super::matrix::Matrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Diagonal {
        variances: Vec<f64>,
        std_devs: Vec<f64>,
    },
    Full {
        matrix: Matrix,
        // Strict Cholesky factor; None when the matrix is only semidefinite.
        chol: Option<Matrix>,
        sample_factor: Matrix,
    },
}

/// Covariance matrix with a diagonal fast path.
#[derive(Clone, Debug, PartialEq)]
pub struct Covariance {
    repr: Repr,
}

impl Covariance {
    /// Diagonal covariance; zero variances are allowed (degenerate, sampling only).
    pub fn diagonal(variances: Vec<f64>) -> Result<Self> {
        if let Some(v) = variances.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Contract(format!(
                "variance must be finite and nonnegative, got {v}"
            )));
        }
        let std_devs = variances.iter().map(|v| v.sqrt()).collect();
        Ok(Covariance {
            repr: Repr::Diagonal {
                variances,
                std_devs,
            },
        })
    }

    pub fn scaled_identity(dim: usize, variance: f64) -> Result<Self> {
        Self::diagonal(vec![variance; dim])
    }

    /// General symmetric positive semidefinite covariance.
    pub fn full(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::dim("Covariance::full", matrix.rows(), matrix.cols()));
        }
        let scale = matrix.max_abs().max(1.0);
        if matrix.max_asymmetry() > 1e-12 * scale {
            return Err(Error::Contract("covariance is not symmetric".into()));
        }
        let chol = cholesky(&matrix).ok();
        let sample_factor = match &chol {
            Some(l) => l.clone(),
            None => semidefinite_factor(&matrix)?,
        };
        Ok(Covariance {
            repr: Repr::Full {
                matrix,
                chol,
                sample_factor,
            },
        })
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Diagonal { variances, .. } => variances.len(),
            Repr::Full { matrix, .. } => matrix.rows(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.repr, Repr::Diagonal { .. })
    }

    /// Diagonal variances if this covariance is stored diagonally.
    pub fn diagonal_variances(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Diagonal { variances, .. } => Some(variances),
            Repr::Full { .. } => None,
        }
    }

    pub fn variance(&self, i: usize) -> f64 {
        match &self.repr {
            Repr::Diagonal { variances, .. } => variances[i],
            Repr::Full { matrix, .. } => matrix[(i, i)],
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        match &self.repr {
            Repr::Diagonal { variances, .. } => Matrix::from_diagonal(variances),
            Repr::Full { matrix, .. } => matrix.clone(),
        }
    }

    pub fn is_positive_definite(&self) -> bool {
        match &self.repr {
            Repr::Diagonal { variances, .. } => variances.iter().all(|v| *v > 0.0),
            Repr::Full { chol, .. } => chol.is_some(),
        }
    }

    fn require_pd(&self) -> Result<()> {
        match &self.repr {
            Repr::Diagonal { variances, .. } => match variances.iter().position(|v| *v <= 0.0) {
                Some(pivot) => Err(Error::NotPositiveDefinite {
                    pivot,
                    value: variances[pivot],
                }),
                None => Ok(()),
            },
            Repr::Full { chol: Some(_), .. } => Ok(()),
            Repr::Full { matrix, .. } => cholesky(matrix).map(|_| ()),
        }
    }

    /// rᵀ·Σ⁻¹·r.
    pub fn weighted_sq_norm(&self, r: &[f64]) -> Result<f64> {
        if r.len() != self.dim() {
            return Err(Error::dim("weighted_sq_norm", self.dim(), r.len()));
        }
        self.require_pd()?;
        Ok(self.weighted_sq_norm_unchecked(r))
    }

    /// Hot-path variant: caller guarantees matching length and definiteness.
    #[inline]
    pub(crate) fn weighted_sq_norm_unchecked(&self, r: &[f64]) -> f64 {
        match &self.repr {
            Repr::Diagonal { variances, .. } => {
                r.iter().zip(variances).map(|(ri, v)| ri * ri / v).sum()
            }
            Repr::Full { chol, .. } => {
                let l = chol.as_ref().expect("positive definite covariance");
                let mut w = r.to_vec();
                forward_substitute(l, &mut w);
                w.iter().map(|v| v * v).sum()
            }
        }
    }

    /// Σ⁻¹·r.
    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.dim() {
            return Err(Error::dim("Covariance::solve", self.dim(), r.len()));
        }
        self.require_pd()?;
        Ok(match &self.repr {
            Repr::Diagonal { variances, .. } => {
                r.iter().zip(variances).map(|(ri, v)| ri / v).collect()
            }
            Repr::Full { chol, .. } => {
                let mut w = r.to_vec();
                super::cholesky::cholesky_solve(chol.as_ref().unwrap(), &mut w);
                w
            }
        })
    }

    /// log det Σ.
    pub fn log_det(&self) -> Result<f64> {
        self.require_pd()?;
        Ok(match &self.repr {
            Repr::Diagonal { variances, .. } => variances.iter().map(|v| v.ln()).sum(),
            Repr::Full { chol, .. } => {
                let l = chol.as_ref().unwrap();
                2.0 * (0..l.rows()).map(|i| l[(i, i)].ln()).sum::<f64>()
            }
        })
    }

    /// Writes L·z into `out`, where L·Lᵀ = Σ and z is standard normal.
    pub fn sample_noise(&self, rng: &mut impl RngCore, out: &mut [f64]) {
        match &self.repr {
            Repr::Diagonal { std_devs, .. } => {
                for (o, s) in out.iter_mut().zip(std_devs) {
                    let z: f64 = StandardNormal.sample(rng);
                    *o = s * z;
                }
            }
            Repr::Full { sample_factor, .. } => {
                let n = sample_factor.rows();
                let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..=i).map(|k| sample_factor[(i, k)] * z[k]).sum();
                }
            }
        }
    }
}

/// rᵀ·R⁻¹·r, the squared Mahalanobis norm of a residual.
pub fn weighted_sq_norm(r: &[f64], cov: &Covariance) -> Result<f64> {
    cov.weighted_sq_norm(r)
}

/// log N(y; mean, R).
pub fn gaussian_logpdf(y: &[f64], mean: &[f64], cov: &Covariance) -> Result<f64> {
    if y.len() != mean.len() {
        return Err(Error::dim("gaussian_logpdf", y.len(), mean.len()));
    }
    let r: Vec<f64> = y.iter().zip(mean).map(|(a, b)| a - b).collect();
    let quad = cov.weighted_sq_norm(&r)?;
    let log_det_2pi = cov.dim() as f64 * (2.0 * PI).ln() + cov.log_det()?;
    Ok(-0.5 * (quad + log_det_2pi))
}

/// One draw from N(mean, cov).
pub fn gaussian_sample(mean: &[f64], cov: &Covariance, rng: &mut impl RngCore) -> Result<Vec<f64>> {
    if mean.len() != cov.dim() {
        return Err(Error::dim("gaussian_sample", cov.dim(), mean.len()));
    }
    let mut out = vec![0.0; mean.len()];
    cov.sample_noise(rng, &mut out);
    for (o, m) in out.iter_mut().zip(mean) {
        *o += m;
    }
    Ok(out)
}

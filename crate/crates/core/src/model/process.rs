use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numerics::{gaussian_logpdf, Covariance, Matrix};

/// User-supplied transition g(x, t).
pub type TransitionFn = Arc<dyn Fn(&[f64], usize) -> Vec<f64> + Send + Sync>;

/// State transition g(x, t).
#[derive(Clone)]
pub enum Transition {
    Identity,
    /// g(x) = A·x + c.
    Affine { matrix: Matrix, offset: Vec<f64> },
    Custom(TransitionFn),
}

impl fmt::Debug for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transition::Identity => f.write_str("Identity"),
            Transition::Affine { matrix, offset } => f
                .debug_struct("Affine")
                .field("matrix", matrix)
                .field("offset", offset)
                .finish(),
            Transition::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Process model x(t+1) = diag(s)·(g(x(t), t) + v(t)), v ~ N(0, Σᵥ), with
/// Gaussian initial distribution p₀.
#[derive(Clone, Debug)]
pub struct ProcessModel {
    n: usize,
    transition: Transition,
    noise: Covariance,
    initial_mean: Vec<f64>,
    initial_cov: Covariance,
}

impl ProcessModel {
    pub fn new(
        transition: Transition,
        noise: Covariance,
        initial_mean: Vec<f64>,
        initial_cov: Covariance,
    ) -> Result<Self> {
        let n = noise.dim();
        if initial_mean.len() != n {
            return Err(Error::dim("ProcessModel initial mean", n, initial_mean.len()));
        }
        if initial_cov.dim() != n {
            return Err(Error::dim("ProcessModel initial covariance", n, initial_cov.dim()));
        }
        if let Transition::Affine { matrix, offset } = &transition {
            if matrix.rows() != n || matrix.cols() != n || offset.len() != n {
                return Err(Error::dim("ProcessModel affine transition", n, matrix.rows()));
            }
        }
        Ok(ProcessModel {
            n,
            transition,
            noise,
            initial_mean,
            initial_cov,
        })
    }

    /// Identity transition, isotropic noise and isotropic zero-mean p₀.
    pub fn random_walk(n: usize, noise_variance: f64, initial_variance: f64) -> Result<Self> {
        Self::new(
            Transition::Identity,
            Covariance::scaled_identity(n, noise_variance)?,
            vec![0.0; n],
            Covariance::scaled_identity(n, initial_variance)?,
        )
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn transition(&self) -> &Transition {
        &self.transition
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.transition, Transition::Identity)
    }

    pub fn noise(&self) -> &Covariance {
        &self.noise
    }

    pub fn initial_mean(&self) -> &[f64] {
        &self.initial_mean
    }

    pub fn initial_cov(&self) -> &Covariance {
        &self.initial_cov
    }

    /// g(x, t).
    pub fn apply_transition(&self, x: &[f64], t: usize) -> Vec<f64> {
        match &self.transition {
            Transition::Identity => x.to_vec(),
            Transition::Affine { matrix, offset } => matrix
                .matvec(x)
                .expect("dimension checked at construction")
                .into_iter()
                .zip(offset)
                .map(|(v, c)| v + c)
                .collect(),
            Transition::Custom(g) => {
                let out = g(x, t);
                assert_eq!(out.len(), self.n, "custom transition changed the state dimension");
                out
            }
        }
    }

    pub fn sample_noise(&self, rng: &mut impl RngCore) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        self.noise.sample_noise(rng, &mut v);
        v
    }

    /// log pᵥ(v).
    pub fn noise_logpdf(&self, v: &[f64]) -> Result<f64> {
        gaussian_logpdf(v, &vec![0.0; self.n], &self.noise)
    }

    pub fn sample_initial(&self, rng: &mut impl RngCore) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        self.initial_cov.sample_noise(rng, &mut z);
        for (zi, m) in z.iter_mut().zip(&self.initial_mean) {
            *zi += m;
        }
        z
    }

    /// One draw from the i-th marginal of p₀.
    pub fn sample_initial_marginal(&self, i: usize, rng: &mut impl RngCore) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.initial_mean[i] + self.initial_cov.variance(i).sqrt() * z
    }

    /// Standard deviation of the i-th process noise marginal.
    pub fn noise_std(&self, i: usize) -> f64 {
        self.noise.variance(i).sqrt()
    }
}

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::support::SupportMask;
use crate::error::{Error, Result};
use crate::numerics::{dot, Covariance, Matrix, SymmetricMatrix};

/// Quadratic measurement map h(x)(i) = aᵢ + bᵢᵀx + xᵀQᵢx with additive
/// Gaussian noise N(0, R).
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticMeasurementModel {
    n: usize,
    a: Vec<f64>,
    b: Matrix,
    q: Vec<SymmetricMatrix>,
    noise: Covariance,
}

impl QuadraticMeasurementModel {
    /// Builds the model; each `Qᵢ` is replaced by its symmetric part.
    pub fn new(a: Vec<f64>, b: Matrix, q: Vec<Matrix>, noise: Covariance) -> Result<Self> {
        let n_meas = a.len();
        if n_meas == 0 {
            return Err(Error::Contract("measurement dimension must be at least 1".into()));
        }
        if b.rows() != n_meas {
            return Err(Error::dim("QuadraticMeasurementModel b rows", n_meas, b.rows()));
        }
        let n = b.cols();
        if n == 0 {
            return Err(Error::Contract("state dimension must be at least 1".into()));
        }
        if q.len() != n_meas {
            return Err(Error::dim("QuadraticMeasurementModel Q count", n_meas, q.len()));
        }
        let mut qs = Vec::with_capacity(n_meas);
        for qi in q {
            if qi.rows() != n || qi.cols() != n {
                return Err(Error::dim("QuadraticMeasurementModel Q order", n, qi.rows()));
            }
            qs.push(SymmetricMatrix::symmetrized(qi));
        }
        if noise.dim() != n_meas {
            return Err(Error::dim("QuadraticMeasurementModel R", n_meas, noise.dim()));
        }
        if !noise.is_positive_definite() {
            return Err(Error::Contract(
                "measurement noise covariance must be positive definite".into(),
            ));
        }
        Ok(QuadraticMeasurementModel {
            n,
            a,
            b,
            q: qs,
            noise,
        })
    }

    /// State dimension n.
    #[inline]
    pub fn state_dim(&self) -> usize {
        self.n
    }

    /// Measurement dimension N.
    #[inline]
    pub fn measurement_dim(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn q(&self) -> &[SymmetricMatrix] {
        &self.q
    }

    pub fn noise(&self) -> &Covariance {
        &self.noise
    }

    /// Same measurement map with a different noise covariance.
    pub fn with_noise(&self, noise: Covariance) -> Result<Self> {
        Self::new(
            self.a.clone(),
            self.b.clone(),
            self.q.iter().map(|q| q.as_matrix().clone()).collect(),
            noise,
        )
    }

    /// h(x).
    pub fn eval_measurement(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::dim("eval_measurement", self.n, x.len()));
        }
        let mut out = Vec::with_capacity(self.measurement_dim());
        let mut qx = vec![0.0; self.n];
        for i in 0..self.measurement_dim() {
            let q = self.q[i].as_matrix();
            for (r, slot) in qx.iter_mut().enumerate() {
                *slot = dot(q.row(r), x);
            }
            out.push(self.a[i] + dot(self.b.row(i), x) + dot(x, &qx));
        }
        Ok(out)
    }

    /// h evaluated at the vector that equals `values` on the support and zero
    /// elsewhere. Costs O(N·k²) for k active coordinates.
    pub fn eval_measurement_on_support(
        &self,
        values: &[f64],
        support: &SupportMask,
    ) -> Result<Vec<f64>> {
        if support.len() != self.n {
            return Err(Error::dim("eval_measurement_on_support support", self.n, support.len()));
        }
        let restricted = self.restrict(support);
        if values.len() != restricted.active().len() {
            return Err(Error::Contract(format!(
                "{} values given for a support of cardinality {}",
                values.len(),
                restricted.active().len()
            )));
        }
        let mut out = vec![0.0; self.measurement_dim()];
        restricted.eval_into(values, &mut out);
        Ok(out)
    }

    /// Precomputes the measurement map restricted to a support.
    pub fn restrict(&self, support: &SupportMask) -> RestrictedModel {
        let active = support.active_indices();
        let k = active.len();
        let n_meas = self.measurement_dim();
        let mut b = Vec::with_capacity(n_meas * k);
        let mut q_diag = Vec::with_capacity(n_meas * k);
        let mut q_upper = Vec::with_capacity(n_meas * k * k.saturating_sub(1) / 2);
        for i in 0..n_meas {
            let qi = &self.q[i];
            for &p in &active {
                b.push(self.b[(i, p)]);
                q_diag.push(qi.get(p, p));
            }
            for (ip, &p) in active.iter().enumerate() {
                for &r in &active[ip + 1..] {
                    q_upper.push(2.0 * qi.get(p, r));
                }
            }
        }
        RestrictedModel {
            active,
            a: self.a.clone(),
            b,
            q_diag,
            q_upper,
        }
    }

    /// Draws y = h(x) + w with w ~ N(0, R).
    pub fn sample_measurement(&self, x: &[f64], rng: &mut impl RngCore) -> Result<Vec<f64>> {
        let mut y = self.eval_measurement(x)?;
        let mut w = vec![0.0; y.len()];
        self.noise.sample_noise(rng, &mut w);
        for (yi, wi) in y.iter_mut().zip(&w) {
            *yi += wi;
        }
        Ok(y)
    }
}

/// The measurement map restricted to an active index set, laid out for fast
/// repeated evaluation on compact particle storage.
#[derive(Clone, Debug)]
pub struct RestrictedModel {
    active: Vec<usize>,
    a: Vec<f64>,
    b: Vec<f64>,
    q_diag: Vec<f64>,
    // 2·Qᵢ(p, r) for p < r, row-major over the upper triangle.
    q_upper: Vec<f64>,
}

impl RestrictedModel {
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn measurement_dim(&self) -> usize {
        self.a.len()
    }

    /// Writes h(x) into `out` for x given on the active set.
    #[inline]
    pub fn eval_into(&self, values: &[f64], out: &mut [f64]) {
        let k = self.active.len();
        let pairs = k * k.saturating_sub(1) / 2;
        for (i, o) in out.iter_mut().enumerate() {
            let b = &self.b[i * k..(i + 1) * k];
            let qd = &self.q_diag[i * k..(i + 1) * k];
            let qu = &self.q_upper[i * pairs..(i + 1) * pairs];
            let mut acc = self.a[i];
            let mut u = 0;
            for p in 0..k {
                let xp = values[p];
                acc += xp * (b[p] + qd[p] * xp);
                let mut cross = 0.0;
                for &xr in &values[p + 1..k] {
                    cross += qu[u] * xr;
                    u += 1;
                }
                acc += xp * cross;
            }
            *o = acc;
        }
    }
}

/// Random model with every entry of aᵢ, bᵢ and Qᵢ drawn from N(0, 1);
/// Qᵢ is symmetrized as (G + Gᵀ)/2.
pub fn random_model(
    n: usize,
    n_meas: usize,
    noise: Covariance,
    rng: &mut impl RngCore,
) -> Result<QuadraticMeasurementModel> {
    let mut draw = || -> f64 { StandardNormal.sample(&mut *rng) };
    let a: Vec<f64> = (0..n_meas).map(|_| draw()).collect();
    let mut b = Matrix::zeros(n_meas, n);
    let mut q = Vec::with_capacity(n_meas);
    for i in 0..n_meas {
        for j in 0..n {
            b[(i, j)] = draw();
        }
        q.push(Matrix::from_fn(n, n, |_, _| draw()));
    }
    QuadraticMeasurementModel::new(a, b, q, noise)
}

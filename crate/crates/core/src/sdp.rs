//! Operator-splitting solver for
//!
//! ```text
//! minimize    Tr(X) + λ·‖y − H(X)‖²_R + μ·‖X‖₁
//! subject to  X ⪰ 0,  fixed entries (X(1,1) = 1),  zero-mask entries = 0
//! ```
//!
//! where ‖r‖²_R = rᵀR⁻¹r and ‖X‖₁ is the entrywise ℓ₁ norm.
//!
//! The smooth part and the affine entry constraints are handled together in
//! the X-step, which is a linear solve done in closed form through the
//! Woodbury identity (H has only N rows). The PSD cone and the ℓ₁ term live
//! on consensus copies Z and Y with exact proximal maps. Rows and columns
//! whose diagonal is masked to zero are removed before iterating, since a PSD
//! matrix with a zero diagonal entry has the whole row and column zero.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::numerics::{
    cholesky, cholesky_solve, symmetric_eigendecomposition, Covariance, Matrix, PsdProjector,
    SymmetricMatrix,
};
use crate::qbp::PhiOperator;

/// One instance of the problem family.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub phi: PhiOperator,
    pub y: Vec<f64>,
    pub noise: Covariance,
    pub lambda: f64,
    pub mu: f64,
    /// Entries forced to zero; (i, j) implies (j, i).
    pub zero_mask: Vec<(usize, usize)>,
    /// Entries pinned to a value; (i, j) implies (j, i).
    pub fixed_entries: Vec<((usize, usize), f64)>,
}

impl SdpProblem {
    /// Problem with X(1,1) = 1 and no mask.
    pub fn new(phi: PhiOperator, y: Vec<f64>, noise: Covariance, lambda: f64, mu: f64) -> Self {
        SdpProblem {
            phi,
            y,
            noise,
            lambda,
            mu,
            zero_mask: Vec::new(),
            fixed_entries: vec![((0, 0), 1.0)],
        }
    }

    pub fn with_zero_mask(mut self, mask: Vec<(usize, usize)>) -> Self {
        self.zero_mask = mask;
        self
    }

    pub fn order(&self) -> usize {
        self.phi.order()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.order();
        if self.y.len() != self.phi.len() {
            return Err(Error::dim("SdpProblem y", self.phi.len(), self.y.len()));
        }
        if self.noise.dim() != self.phi.len() {
            return Err(Error::dim("SdpProblem R", self.phi.len(), self.noise.dim()));
        }
        if !self.noise.is_positive_definite() {
            return Err(Error::Contract("SDP noise covariance must be positive definite".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) || !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::Contract(format!(
                "λ and μ must be finite and nonnegative (λ={}, μ={})",
                self.lambda, self.mu
            )));
        }
        let in_range = |(i, j): (usize, usize)| i < m && j < m;
        if !self.zero_mask.iter().all(|&p| in_range(p))
            || !self.fixed_entries.iter().all(|&(p, _)| in_range(p))
        {
            return Err(Error::Contract("mask position outside the matrix".into()));
        }
        let norm = |(i, j): (usize, usize)| (i.min(j), i.max(j));
        for &(p, _) in &self.fixed_entries {
            if self.zero_mask.iter().any(|&z| norm(z) == norm(p)) {
                return Err(Error::Contract(format!("entry {p:?} is both fixed and masked")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Initial penalty; `None` picks one from the problem scale.
    pub rho: Option<f64>,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Ratio of relative primal to relative dual residual that triggers a
    /// ×2 / ÷2 penalty rescale.
    pub rho_adapt_ratio: f64,
    pub rho_adapt_interval: usize,
    pub over_relaxation: f64,
    /// Alternations between the PSD cone and the entry constraints when
    /// polishing the final iterate.
    pub polish_alternations: usize,
    /// Record per-iteration residuals and objective.
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 2000,
            eps_abs: 1e-6,
            eps_rel: 1e-5,
            rho: None,
            rho_min: 1e-6,
            rho_max: 1e6,
            rho_adapt_ratio: 10.0,
            rho_adapt_interval: 5,
            over_relaxation: 1.6,
            polish_alternations: 10,
            trace: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || !(self.eps_abs > 0.0) || !(self.eps_rel > 0.0) {
            return Err(Error::Config(
                "solver needs max_iterations ≥ 1 and positive tolerances".into(),
            ));
        }
        if !(self.over_relaxation > 0.0 && self.over_relaxation < 2.0) {
            return Err(Error::Config("over-relaxation must lie in (0, 2)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective: f64,
    pub converged: bool,
    pub rho: f64,
    pub trace: Vec<TraceRow>,
}

impl SolveStats {
    pub fn write_trace_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "iteration,primal_residual,dual_residual,objective")?;
        for row in &self.trace {
            writeln!(
                out,
                "{},{},{},{}",
                row.iteration, row.primal_residual, row.dual_residual, row.objective
            )?;
        }
        Ok(())
    }
}

/// Tr(X) + λ‖y − H(X)‖²_R + μ‖X‖₁.
pub fn objective(problem: &SdpProblem, x: &SymmetricMatrix) -> Result<f64> {
    let hx = problem.phi.apply(x)?;
    let r: Vec<f64> = problem.y.iter().zip(&hx).map(|(a, b)| a - b).collect();
    let mut value = x.trace();
    if problem.lambda > 0.0 {
        value += problem.lambda * problem.noise.weighted_sq_norm(&r)?;
    }
    if problem.mu > 0.0 {
        value += problem.mu * x.l1_norm();
    }
    Ok(value)
}

/// Solves the problem; on non-convergence the last (polished) iterate is
/// returned with `converged = false`.
pub fn solve(problem: &SdpProblem, opts: &SolverOptions) -> Result<(SymmetricMatrix, SolveStats)> {
    problem.validate()?;
    opts.validate()?;
    let m = problem.order();

    // Presolve: drop indices whose diagonal is masked to zero.
    let mut zero: Vec<(usize, usize)> = problem
        .zero_mask
        .iter()
        .map(|&(i, j)| (i.min(j), i.max(j)))
        .collect();
    zero.sort_unstable();
    zero.dedup();
    let dead: Vec<bool> = (0..m).map(|i| zero.binary_search(&(i, i)).is_ok()).collect();
    for &((i, j), v) in &problem.fixed_entries {
        if (dead[i] || dead[j]) && v != 0.0 {
            return Err(Error::Contract(format!(
                "fixed entry ({i}, {j}) = {v} conflicts with a zero diagonal"
            )));
        }
    }
    let keep: Vec<usize> = (0..m).filter(|&i| !dead[i]).collect();
    let position: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(r, &i)| (i, r)).collect();
    let mut fixed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &((i, j), v) in &problem.fixed_entries {
        if let (Some(&a), Some(&b)) = (position.get(&i), position.get(&j)) {
            fixed.insert((a.min(b), a.max(b)), v);
        }
    }
    for &(i, j) in &zero {
        if let (Some(&a), Some(&b)) = (position.get(&i), position.get(&j)) {
            fixed.insert((a, b), 0.0);
        }
    }

    let reduced = ReducedProblem::new(problem, &keep, &fixed)?;
    let (xr, mut stats) = reduced.run(opts)?;

    let mut full = Matrix::zeros(m, m);
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            full[(i, j)] = xr[a * keep.len() + b];
        }
    }
    let x = SymmetricMatrix::symmetrized(full);
    stats.objective = objective(problem, &x)?;
    Ok((x, stats))
}

struct ReducedProblem<'a> {
    problem: &'a SdpProblem,
    m: usize,
    // Row-major r×r; true where the entry is free.
    free: Vec<bool>,
    fixed_values: Vec<f64>,
    // Φᵢ restricted to kept indices, with fixed positions zeroed.
    phi_free: Vec<Vec<f64>>,
    phi_full: Vec<Vec<f64>>,
    gram: Matrix,
    noise: Matrix,
    // −P_F(I) + 2λ·G*(R⁻¹(y − H(X_fixed))).
    rhs_const: Vec<f64>,
}

impl<'a> ReducedProblem<'a> {
    fn new(
        problem: &'a SdpProblem,
        keep: &[usize],
        fixed: &BTreeMap<(usize, usize), f64>,
    ) -> Result<Self> {
        let m = keep.len();
        let mut free = vec![true; m * m];
        let mut fixed_values = vec![0.0; m * m];
        for (&(a, b), &v) in fixed {
            for (p, q) in [(a, b), (b, a)] {
                free[p * m + q] = false;
                fixed_values[p * m + q] = v;
            }
        }
        let phi = problem.phi.restrict(keep);
        let phi_full: Vec<Vec<f64>> = phi.matrices().iter().map(|p| p.as_slice().to_vec()).collect();
        let phi_free: Vec<Vec<f64>> = phi_full
            .iter()
            .map(|p| p.iter().zip(&free).map(|(v, f)| if *f { *v } else { 0.0 }).collect())
            .collect();
        let n_meas = phi_full.len();
        let gram = Matrix::from_fn(n_meas, n_meas, |i, j| dot(&phi_free[i], &phi_free[j]));

        let h_fixed: Vec<f64> = phi_full.iter().map(|p| dot(p, &fixed_values)).collect();
        let resid: Vec<f64> = problem.y.iter().zip(&h_fixed).map(|(y, h)| y - h).collect();
        let mut rhs_const = vec![0.0; m * m];
        for i in 0..m {
            if free[i * m + i] {
                rhs_const[i * m + i] = -1.0;
            }
        }
        if problem.lambda > 0.0 {
            let w = problem.noise.solve(&resid)?;
            for (p, wi) in phi_free.iter().zip(&w) {
                for (o, v) in rhs_const.iter_mut().zip(p) {
                    *o += 2.0 * problem.lambda * wi * v;
                }
            }
        }
        Ok(ReducedProblem {
            problem,
            m,
            free,
            fixed_values,
            phi_free,
            phi_full,
            gram,
            noise: problem.noise.to_matrix(),
            rhs_const,
        })
    }

    // Cholesky factor of (a/(2λ))·R + G·G*, the Woodbury core for penalty a.
    fn woodbury_factor(&self, a: f64) -> Result<Option<Matrix>> {
        if self.problem.lambda == 0.0 {
            return Ok(None);
        }
        let scale = a / (2.0 * self.problem.lambda);
        let n = self.gram.rows();
        let k = Matrix::from_fn(n, n, |i, j| self.gram[(i, j)] + scale * self.noise[(i, j)]);
        cholesky(&k).map(Some)
    }

    fn objective_reduced(&self, x: &[f64]) -> f64 {
        let m = self.m;
        let mut value: f64 = (0..m).map(|i| x[i * m + i]).sum();
        if self.problem.lambda > 0.0 {
            let r: Vec<f64> = self
                .phi_full
                .iter()
                .zip(&self.problem.y)
                .map(|(p, y)| y - dot(p, x))
                .collect();
            value += self.problem.lambda * self.problem.noise.weighted_sq_norm_unchecked(&r);
        }
        if self.problem.mu > 0.0 {
            value += self.problem.mu * x.iter().map(|v| v.abs()).sum::<f64>();
        }
        value
    }

    fn initial_rho(&self) -> f64 {
        if self.problem.lambda == 0.0 || self.gram.rows() == 0 {
            return 1.0;
        }
        let n = self.gram.rows();
        let mean_gram = (0..n).map(|i| self.gram[(i, i)]).sum::<f64>() / n as f64;
        let mean_noise = (0..n).map(|i| self.noise[(i, i)]).sum::<f64>() / n as f64;
        (2.0 * self.problem.lambda * mean_gram / mean_noise).sqrt().clamp(1e-2, 1e4)
    }

    fn run(&self, opts: &SolverOptions) -> Result<(Vec<f64>, SolveStats)> {
        let m = self.m;
        let mm = m * m;
        let use_l1 = self.problem.mu > 0.0;
        let copies = if use_l1 { 2.0 } else { 1.0 };
        let alpha = opts.over_relaxation;

        if self.free.iter().all(|f| !f) {
            let x = self.fixed_values.clone();
            let polished = self.polish(x, opts.polish_alternations)?;
            let objective = self.objective_reduced(&polished);
            return Ok((
                polished,
                SolveStats {
                    iterations: 0,
                    primal_residual: 0.0,
                    dual_residual: 0.0,
                    objective,
                    converged: true,
                    rho: 0.0,
                    trace: Vec::new(),
                },
            ));
        }

        let mut rho = opts.rho.unwrap_or_else(|| self.initial_rho()).clamp(opts.rho_min, opts.rho_max);
        let mut factor = self.woodbury_factor(copies * rho)?;
        let mut projector = PsdProjector::new();

        let mut x = self.fixed_values.clone();
        let mut z = x.clone();
        let mut u = vec![0.0; mm];
        let mut yv = x.clone();
        let mut v = vec![0.0; mm];
        let mut rhs = vec![0.0; mm];
        let mut gr = vec![0.0; self.phi_free.len()];

        let mut stats = SolveStats {
            iterations: 0,
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
            objective: f64::NAN,
            converged: false,
            rho,
            trace: Vec::new(),
        };

        for iter in 1..=opts.max_iterations {
            // X-step on the free entries.
            let a = copies * rho;
            for idx in 0..mm {
                rhs[idx] = if self.free[idx] {
                    let mut target = z[idx] - u[idx];
                    if use_l1 {
                        target += yv[idx] - v[idx];
                    }
                    rho * target + self.rhs_const[idx]
                } else {
                    0.0
                };
            }
            if let Some(l) = &factor {
                for (g, p) in gr.iter_mut().zip(&self.phi_free) {
                    *g = dot(p, &rhs);
                }
                cholesky_solve(l, &mut gr);
                for (p, &g) in self.phi_free.iter().zip(&gr) {
                    for (r, pv) in rhs.iter_mut().zip(p) {
                        *r -= g * pv;
                    }
                }
            }
            for idx in 0..mm {
                x[idx] = if self.free[idx] {
                    rhs[idx] / a
                } else {
                    self.fixed_values[idx]
                };
            }

            // Z-step: PSD projection of the relaxed point.
            let z_old = z.clone();
            let relaxed: Vec<f64> = (0..mm)
                .map(|i| alpha * x[i] + (1.0 - alpha) * z_old[i] + u[i])
                .collect();
            let (zp, _) = projector.project(&SymmetricMatrix::symmetrized(Matrix::from_row_major(
                m, m, relaxed.clone(),
            )?))?;
            z.copy_from_slice(zp.as_slice());
            for i in 0..mm {
                u[i] = relaxed[i] - z[i];
            }

            // Y-step: entrywise soft threshold.
            let y_old = if use_l1 { Some(yv.clone()) } else { None };
            if use_l1 {
                let kappa = self.problem.mu / rho;
                let yo = y_old.as_ref().unwrap();
                for i in 0..mm {
                    let relaxed = alpha * x[i] + (1.0 - alpha) * yo[i] + v[i];
                    yv[i] = soft_threshold(relaxed, kappa);
                    v[i] = relaxed - yv[i];
                }
            }

            // Residuals.
            let mut r_pri = 0.0;
            let mut r_dual = 0.0;
            let mut norm_x = 0.0;
            let mut norm_zy = 0.0;
            let mut norm_dual = 0.0;
            for i in 0..mm {
                r_pri += (x[i] - z[i]).powi(2);
                norm_x += x[i] * x[i];
                norm_zy += z[i] * z[i];
                let mut dz = z[i] - z_old[i];
                let mut dual_var = u[i];
                if use_l1 {
                    r_pri += (x[i] - yv[i]).powi(2);
                    norm_zy += yv[i] * yv[i];
                    dz += yv[i] - y_old.as_ref().unwrap()[i];
                    dual_var += v[i];
                }
                r_dual += dz * dz;
                norm_dual += dual_var * dual_var;
            }
            let r_pri = r_pri.sqrt();
            let r_dual = rho * r_dual.sqrt();
            let scale = copies.sqrt() * m as f64;
            let eps_pri = scale * opts.eps_abs
                + opts.eps_rel * (copies.sqrt() * norm_x.sqrt()).max(norm_zy.sqrt());
            let eps_dual = scale * opts.eps_abs + opts.eps_rel * rho * norm_dual.sqrt();

            stats.iterations = iter;
            stats.primal_residual = r_pri;
            stats.dual_residual = r_dual;
            if opts.trace {
                stats.trace.push(TraceRow {
                    iteration: iter,
                    primal_residual: r_pri,
                    dual_residual: r_dual,
                    objective: self.objective_reduced(&z),
                });
            }
            if r_pri <= eps_pri && r_dual <= eps_dual {
                stats.converged = true;
                break;
            }

            if iter % opts.rho_adapt_interval == 0 {
                // Residuals relative to their own scales.
                let a_p = r_pri / (copies.sqrt() * norm_x.sqrt()).max(norm_zy.sqrt()).max(1e-12);
                let a_d = r_dual / (rho * norm_dual.sqrt()).max(1e-12);
                let new_rho = if a_p > opts.rho_adapt_ratio * a_d {
                    (rho * 2.0).min(opts.rho_max)
                } else if a_d > opts.rho_adapt_ratio * a_p {
                    (rho / 2.0).max(opts.rho_min)
                } else {
                    rho
                };
                if new_rho != rho {
                    let ratio = rho / new_rho;
                    u.iter_mut().for_each(|e| *e *= ratio);
                    v.iter_mut().for_each(|e| *e *= ratio);
                    rho = new_rho;
                    factor = self.woodbury_factor(copies * rho)?;
                }
            }
        }
        stats.rho = rho;
        let polished = self.polish(z, opts.polish_alternations)?;
        stats.objective = self.objective_reduced(&polished);
        Ok((polished, stats))
    }

    // Alternates between the entry constraints and the PSD cone, ending on
    // the entry constraints so they hold exactly.
    fn polish(&self, mut x: Vec<f64>, alternations: usize) -> Result<Vec<f64>> {
        let m = self.m;
        let pin = |x: &mut Vec<f64>| {
            for i in 0..m * m {
                if !self.free[i] {
                    x[i] = self.fixed_values[i];
                }
            }
        };
        pin(&mut x);
        for _ in 0..alternations {
            let s = SymmetricMatrix::symmetrized(Matrix::from_row_major(m, m, x.clone())?);
            let eig = symmetric_eigendecomposition(&s)?;
            let scale = eig.values.first().map_or(1.0, |v| v.abs().max(1.0));
            if eig.min_value() >= -1e-12 * scale {
                break;
            }
            x = eig.reconstruct_with(|l| l.max(0.0)).as_slice().to_vec();
            pin(&mut x);
        }
        Ok(x)
    }
}

#[inline]
fn soft_threshold(v: f64, kappa: f64) -> f64 {
    if v > kappa {
        v - kappa
    } else if v < -kappa {
        v + kappa
    } else {
        0.0
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    crate::numerics::dot(a, b)
}

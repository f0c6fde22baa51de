//! Lifting, masked candidate solves, support detection and full quadratic
//! basis pursuit.
//!
//! For a current support S and a candidate j ∉ S, the candidate problem keeps
//! the rows and columns of the lifted matrix indexed by {0} ∪ S ∪ {j + 1}
//! free and forces every other entry to zero. The candidate with the lowest
//! attained objective is reported as the most likely new support element.

mod lifting;

use std::io::Write;

use rayon::prelude::*;

pub use lifting::{extract_state, lift, lift_model, ExtractedState, LiftedMatrix, PhiOperator};

use crate::error::{Error, Result};
use crate::model::SupportMask;
use crate::numerics::{Covariance, SymmetricMatrix};
use crate::sdp::{self, SdpProblem, SolveStats, SolverOptions};

/// Default ℓ₁ weight for [`qbp_full`].
pub const DEFAULT_QBP_MU: f64 = 0.1;

/// Outcome of one masked candidate solve.
#[derive(Clone, Debug)]
pub struct MaskedSolution {
    pub x: SymmetricMatrix,
    /// Attained objective; ∞ when the solver did not converge.
    pub cost: f64,
    pub stats: SolveStats,
}

/// Zero-mask positions for candidate `j` (0-based state index): every lifted
/// index outside {0} ∪ S ∪ {j + 1} gets its diagonal masked, which the
/// solver extends to the whole row and column.
pub fn candidate_mask(support: &SupportMask, j: Option<usize>) -> Vec<(usize, usize)> {
    (0..support.len())
        .filter(|&i| !support.contains(i) && Some(i) != j)
        .map(|i| (i + 1, i + 1))
        .collect()
}

pub fn solve_masked_sdp(
    phi: &PhiOperator,
    y: &[f64],
    support: &SupportMask,
    j: usize,
    lambda: f64,
    noise: &Covariance,
    opts: &SolverOptions,
) -> Result<MaskedSolution> {
    if support.len() + 1 != phi.order() {
        return Err(Error::dim("masked SDP support", phi.order() - 1, support.len()));
    }
    if j >= support.len() {
        return Err(Error::Contract(format!("candidate {j} outside state dimension {}", support.len())));
    }
    if support.contains(j) {
        return Err(Error::Contract(format!("candidate {j} already in the support")));
    }
    let problem = SdpProblem::new(phi.clone(), y.to_vec(), noise.clone(), lambda, 0.0)
        .with_zero_mask(candidate_mask(support, Some(j)));
    let (x, stats) = sdp::solve(&problem, opts)?;
    let cost = if stats.converged { stats.objective } else { f64::INFINITY };
    if !stats.converged {
        log::debug!(
            "candidate {j}: no convergence after {} iterations (primal {:.3e}, dual {:.3e})",
            stats.iterations,
            stats.primal_residual,
            stats.dual_residual
        );
    }
    Ok(MaskedSolution { x, cost, stats })
}

#[derive(Clone, Debug)]
pub struct CandidateSweepResult {
    /// c(j) per state index; ∞ for on-support or failed candidates.
    pub costs: Vec<f64>,
    pub best: usize,
    pub x: SymmetricMatrix,
    pub extracted: ExtractedState,
}

impl CandidateSweepResult {
    /// `j,cost` rows with 1-based j.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "j,cost")?;
        for (j, c) in self.costs.iter().enumerate() {
            writeln!(out, "{},{}", j + 1, c)?;
        }
        Ok(())
    }
}

pub fn detect_support_candidate(
    phi: &PhiOperator,
    y: &[f64],
    support: &SupportMask,
    lambda: f64,
    noise: &Covariance,
    opts: &SolverOptions,
) -> Result<CandidateSweepResult> {
    let candidates = support.inactive_indices();
    if candidates.is_empty() {
        return Err(Error::Contract("support is full; nothing to detect".into()));
    }
    let solutions: Vec<(usize, Option<MaskedSolution>)> = candidates
        .par_iter()
        .map(|&j| {
            let sol = match solve_masked_sdp(phi, y, support, j, lambda, noise, opts) {
                Ok(s) => Some(s),
                Err(Error::NotPositiveDefinite { .. }) | Err(Error::NoConvergence { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok((j, sol))
        })
        .collect::<Result<_>>()?;

    let mut costs = vec![f64::INFINITY; support.len()];
    let mut best: Option<(usize, f64)> = None;
    for (j, sol) in &solutions {
        if let Some(s) = sol {
            costs[*j] = s.cost;
            if s.cost.is_finite() && best.is_none_or(|(_, c)| s.cost < c) {
                best = Some((*j, s.cost));
            }
        }
    }
    let (best, _) = best.ok_or(Error::DetectionFailure)?;
    let x = solutions
        .into_iter()
        .find(|(j, _)| *j == best)
        .and_then(|(_, s)| s)
        .map(|s| s.x)
        .expect("best candidate has a solution");
    let extracted = extract_state(&x)?;
    Ok(CandidateSweepResult {
        costs,
        best,
        x,
        extracted,
    })
}

#[derive(Clone, Debug)]
pub struct QbpSolution {
    pub state: Vec<f64>,
    pub support: SupportMask,
    pub x: SymmetricMatrix,
    pub rank_one_ratio: f64,
    pub stats: SolveStats,
}

/// Support read off a QBP estimate: |x̂ᵢ| > max(1e-3, 0.01·‖x̂‖∞).
pub fn support_from_estimate(state: &[f64]) -> SupportMask {
    let peak = state.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = (0.01 * peak).max(1e-3);
    SupportMask::from_bits(state.iter().map(|v| v.abs() > threshold).collect())
}

/// Unmasked problem with an ℓ₁ term; errors when the solver does not reach
/// its tolerances.
pub fn qbp_full(
    phi: &PhiOperator,
    y: &[f64],
    lambda: f64,
    mu: f64,
    noise: &Covariance,
    opts: &SolverOptions,
) -> Result<QbpSolution> {
    let problem = SdpProblem::new(phi.clone(), y.to_vec(), noise.clone(), lambda, mu);
    let (x, stats) = sdp::solve(&problem, opts)?;
    if !stats.converged {
        return Err(Error::NoConvergence {
            algorithm: "qbp",
            iterations: stats.iterations,
            residual: stats.primal_residual.max(stats.dual_residual),
        });
    }
    let extracted = extract_state(&x)?;
    Ok(QbpSolution {
        support: support_from_estimate(&extracted.state),
        state: extracted.state,
        rank_one_ratio: extracted.rank_one_ratio,
        x,
        stats,
    })
}

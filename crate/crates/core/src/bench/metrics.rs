//! Accuracy, support and latency metrics.
//!
//! Supports follow the trajectory convention: the true support at t is the
//! mask that produced x(t). An estimate's support at t is the set of indices
//! with a nonzero estimate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{SupportMask, Trajectory};

/// Steps after a truth change within which a matching estimator change
/// counts as a detection.
pub const LATENCY_CAP: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeKind {
    Addition,
    Removal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Detection {
    /// Detected this many steps after the truth change.
    Latency(usize),
    /// Not detected within [`LATENCY_CAP`] steps.
    Missed,
    /// The run ended before the cap without a detection.
    Censored,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportEvent {
    /// 1-based time of the first step with the new truth support.
    pub t: usize,
    /// 0-based state index.
    pub index: usize,
    pub kind: ChangeKind,
    pub detection: Detection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupportScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 of an estimated support; when both sets are empty
/// all three are 1, and an empty side alone scores 0 on its ratio.
pub fn support_scores(truth: &SupportMask, estimate: &SupportMask) -> SupportScores {
    let tp = truth
        .bits()
        .iter()
        .zip(estimate.bits())
        .filter(|(a, b)| **a && **b)
        .count() as f64;
    let n_true = truth.cardinality() as f64;
    let n_est = estimate.cardinality() as f64;
    if n_true == 0.0 && n_est == 0.0 {
        return SupportScores {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        };
    }
    let precision = if n_est > 0.0 { tp / n_est } else { 0.0 };
    let recall = if n_true > 0.0 { tp / n_true } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    SupportScores {
        precision,
        recall,
        f1,
    }
}

pub fn support_of(estimate: &[f64]) -> SupportMask {
    SupportMask::from_bits(estimate.iter().map(|v| *v != 0.0).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub method: String,
    pub rmse_total: f64,
    /// RMSE over the (t, i) pairs with i in the true support at t; 0 when
    /// there are none.
    pub rmse_active: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    pub events: Vec<SupportEvent>,
    pub wall_time_s: Option<f64>,
}

impl MetricsReport {
    /// Fraction of uncensored addition events detected within `bound`
    /// steps, or `None` when there are none.
    pub fn addition_hit_rate(&self, bound: usize) -> Option<f64> {
        let relevant: Vec<&SupportEvent> = self
            .events
            .iter()
            .filter(|e| e.kind == ChangeKind::Addition && e.detection != Detection::Censored)
            .collect();
        if relevant.is_empty() {
            return None;
        }
        let hits = relevant
            .iter()
            .filter(|e| matches!(e.detection, Detection::Latency(l) if l <= bound))
            .count();
        Some(hits as f64 / relevant.len() as f64)
    }
}

/// Truth support changes with their detection status in `supports`.
pub fn support_events(truth: &[SupportMask], supports: &[SupportMask]) -> Vec<SupportEvent> {
    let mut events = Vec::new();
    for t in 1..truth.len() {
        for i in 0..truth[t].len() {
            let now = truth[t].contains(i);
            if now == truth[t - 1].contains(i) {
                continue;
            }
            let detection = (t..truth.len().min(t + LATENCY_CAP + 1))
                .find(|&tau| supports[tau].contains(i) == now)
                .map(|tau| Detection::Latency(tau - t))
                .unwrap_or(if t + LATENCY_CAP < truth.len() {
                    Detection::Missed
                } else {
                    Detection::Censored
                });
            events.push(SupportEvent {
                t: t + 1,
                index: i,
                kind: if now { ChangeKind::Addition } else { ChangeKind::Removal },
                detection,
            });
        }
    }
    events
}

pub fn compute_metrics(
    method: &str,
    trajectory: &Trajectory,
    estimates: &[Vec<f64>],
    wall_time_s: Option<f64>,
) -> Result<MetricsReport> {
    if estimates.len() != trajectory.len() {
        return Err(Error::dim("metrics estimate count", trajectory.len(), estimates.len()));
    }
    let n = trajectory.state_dim();
    let mut sq_total = 0.0;
    let mut sq_active = 0.0;
    let mut count_active = 0usize;
    let mut precision = Vec::with_capacity(estimates.len());
    let mut recall = Vec::with_capacity(estimates.len());
    let mut f1 = Vec::with_capacity(estimates.len());
    let mut supports = Vec::with_capacity(estimates.len());
    for (step, est) in trajectory.steps.iter().zip(estimates) {
        if est.len() != n {
            return Err(Error::dim("metrics estimate length", n, est.len()));
        }
        for i in 0..n {
            let d = (est[i] - step.state[i]).powi(2);
            sq_total += d;
            if step.support.contains(i) {
                sq_active += d;
                count_active += 1;
            }
        }
        let s = support_of(est);
        let scores = support_scores(&step.support, &s);
        precision.push(scores.precision);
        recall.push(scores.recall);
        f1.push(scores.f1);
        supports.push(s);
    }
    let truth: Vec<SupportMask> = trajectory.steps.iter().map(|s| s.support.clone()).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(MetricsReport {
        method: method.to_string(),
        rmse_total: (sq_total / (n * estimates.len()) as f64).sqrt(),
        rmse_active: if count_active > 0 {
            (sq_active / count_active as f64).sqrt()
        } else {
            0.0
        },
        mean_precision: mean(&precision),
        mean_recall: mean(&recall),
        mean_f1: mean(&f1),
        precision,
        recall,
        f1,
        events: support_events(&truth, &supports),
        wall_time_s,
    })
}

//! The nonlinear compressive particle filter.
//!
//! Each step runs a measurement update on the current support, checks
//! whether the filtered mean still explains the measurement, and if not runs
//! the candidate sweep to add one index. Indices whose estimate stays within
//! ε of zero for Δt consecutive steps are dropped. Whenever the support
//! changes, the last Δt + 1 steps are filtered again from a buffered
//! predicted cloud with the new support.
//!
//! All randomness is drawn from streams keyed by `(seed, purpose, time)`, so
//! replaying a step reproduces it exactly.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::model::{ProcessModel, QuadraticMeasurementModel, SupportMask};
use crate::numerics::{stream_id, RngStream};
use crate::particle::{init_cloud, CloudKind, ParticleCloud, ResampleScheme};
use crate::qbp::{self, lift_model, PhiOperator};
use crate::sdp::SolverOptions;

const PURPOSE_INIT: u16 = 0x10;
const PURPOSE_TIME_UPDATE: u16 = 0x11;
const PURPOSE_RESAMPLE: u16 = 0x12;
const PURPOSE_SUPPORT_CHANGE: u16 = 0x13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NcpfConfig {
    pub particles: usize,
    pub lambda: f64,
    pub delta_t: usize,
    /// Removal bound; `None` means three process-noise standard deviations.
    pub epsilon: Option<f64>,
    /// χ²(N) quantile of the weighted residual above which a step triggers
    /// the candidate sweep.
    pub trigger_quantile: f64,
    /// Candidate solutions with σ₂/σ₁ above this are retried with λ halved.
    pub rank_one_tolerance: f64,
    pub max_lambda_retries: usize,
    /// Steps after a committed addition during which triggers are ignored.
    pub add_cooldown: usize,
    /// ℓ₁ weight of the initial full QBP solve.
    pub init_mu: f64,
    pub resample: ResampleScheme,
    pub solver: SolverOptions,
}

impl Default for NcpfConfig {
    fn default() -> Self {
        NcpfConfig {
            particles: 10_000,
            lambda: 1.0,
            delta_t: 3,
            epsilon: None,
            trigger_quantile: 0.999,
            rank_one_tolerance: 0.1,
            max_lambda_retries: 3,
            add_cooldown: 0,
            init_mu: qbp::DEFAULT_QBP_MU,
            resample: ResampleScheme::Systematic,
            solver: SolverOptions::default(),
        }
    }
}

impl NcpfConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.particles == 0 {
            return bad("particles must be at least 1");
        }
        if self.delta_t == 0 {
            return bad("delta_t must be at least 1");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be positive");
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return bad("epsilon must be positive");
            }
        }
        if !(self.trigger_quantile > 0.0 && self.trigger_quantile < 1.0) {
            return bad("trigger_quantile must lie in (0, 1)");
        }
        if !(self.rank_one_tolerance >= 0.0) || !(self.init_mu >= 0.0) {
            return bad("rank_one_tolerance and init_mu must be nonnegative");
        }
        self.solver.validate()
    }

    pub fn resolved_epsilon(&self, process: &ProcessModel) -> f64 {
        self.epsilon.unwrap_or_else(|| {
            let n = process.dim().max(1);
            let mean_std = (0..process.dim()).map(|i| process.noise_std(i)).sum::<f64>() / n as f64;
            3.0 * mean_std
        })
    }
}

/// Chi-square quantile used by [`check_add_trigger`].
pub fn trigger_threshold(measurement_dim: usize, quantile: f64) -> Result<f64> {
    let dist = ChiSquared::new(measurement_dim as f64)
        .map_err(|e| Error::Config(format!("chi-square with {measurement_dim} dof: {e}")))?;
    Ok(dist.inverse_cdf(quantile))
}

/// Weighted residual ‖y − h(x̂)‖²_R.
pub fn residual_sq(y: &[f64], x_hat: &[f64], model: &QuadraticMeasurementModel) -> Result<f64> {
    let h = model.eval_measurement(x_hat)?;
    let r: Vec<f64> = y.iter().zip(&h).map(|(a, b)| a - b).collect();
    model.noise().weighted_sq_norm(&r)
}

/// True when the weighted residual of the filtered mean exceeds `threshold`.
pub fn check_add_trigger(
    y: &[f64],
    x_hat: &[f64],
    model: &QuadraticMeasurementModel,
    threshold: f64,
) -> Result<bool> {
    Ok(residual_sq(y, x_hat, model)? > threshold)
}

/// Consecutive in-bound counts per state index. An index can be held out of
/// counting until a given time, which is how a freshly added index is kept
/// from being counted over the window replayed to add it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroCrossingTracker {
    counts: Vec<usize>,
    resume: Vec<usize>,
}

impl ZeroCrossingTracker {
    pub fn new(n: usize) -> Self {
        ZeroCrossingTracker {
            counts: vec![0; n],
            resume: vec![0; n],
        }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Zeroes the count of `i` and skips it for every time before `resume`.
    pub fn reset(&mut self, i: usize, resume: usize) {
        self.counts[i] = 0;
        self.resume[i] = resume;
    }

    /// Updates the counts of the active indices with the estimate at time
    /// `t` and returns the indices whose count reached `limit`.
    pub fn update(
        &mut self,
        estimate: &[f64],
        support: &SupportMask,
        epsilon: f64,
        limit: usize,
        t: usize,
    ) -> Vec<usize> {
        let mut reached = Vec::new();
        for i in 0..self.counts.len() {
            if !support.contains(i) {
                self.counts[i] = 0;
                continue;
            }
            if t < self.resume[i] {
                continue;
            }
            if estimate[i].abs() <= epsilon {
                self.counts[i] = (self.counts[i] + 1).min(limit);
                if self.counts[i] == limit {
                    reached.push(i);
                }
            } else {
                self.counts[i] = 0;
            }
        }
        reached
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    /// Predicted cloud at time `cloud.t()`.
    pub cloud: ParticleCloud,
    pub measurement: Vec<f64>,
    /// Tracker before the measurement at that time was processed.
    pub tracker: ZeroCrossingTracker,
}

/// The last Δt + 1 snapshots, oldest first.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryBuffer {
    capacity: usize,
    entries: VecDeque<Snapshot>,
}

impl HistoryBuffer {
    pub fn new(delta_t: usize) -> Self {
        HistoryBuffer {
            capacity: delta_t + 1,
            entries: VecDeque::with_capacity(delta_t + 2),
        }
    }

    pub fn push(&mut self, snapshot: Snapshot) {
        if let Some(last) = self.entries.back() {
            debug_assert_eq!(last.cloud.t() + 1, snapshot.cloud.t());
        }
        self.entries.push_back(snapshot);
        while self.entries.len() > self.capacity {
            self.entries.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn entries(&self) -> impl Iterator<Item = &Snapshot> {
        self.entries.iter()
    }
}

/// Everything the filter carries between steps.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterState {
    /// Time of the next measurement.
    pub t: usize,
    /// Predicted cloud at `t`; its support is the support estimate.
    pub cloud: ParticleCloud,
    pub tracker: ZeroCrossingTracker,
    pub history: HistoryBuffer,
    /// Triggers are ignored while `t` is below this.
    pub trigger_resume: usize,
}

impl FilterState {
    pub fn support(&self) -> &SupportMask {
        self.cloud.support()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "event", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    Trigger {
        residual: f64,
        threshold: f64,
        /// `detection_failure` when no candidate produced a finite cost.
        outcome: String,
    },
    Add {
        index: usize,
        cost: f64,
        lambda: f64,
        rank_one_ratio: f64,
    },
    Remove {
        index: usize,
    },
    Rollback {
        from: usize,
        to: usize,
        support: Vec<usize>,
    },
    Degeneracy {
        replay: bool,
    },
}

/// One diagnostics record; `t` and indices are 1-based when serialized.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FilterEvent {
    pub t: usize,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl FilterEvent {
    fn one_based(&self) -> FilterEvent {
        let kind = match &self.kind {
            EventKind::Add {
                index,
                cost,
                lambda,
                rank_one_ratio,
            } => EventKind::Add {
                index: index + 1,
                cost: *cost,
                lambda: *lambda,
                rank_one_ratio: *rank_one_ratio,
            },
            EventKind::Remove { index } => EventKind::Remove { index: index + 1 },
            EventKind::Rollback { from, to, support } => EventKind::Rollback {
                from: *from,
                to: *to,
                support: support.iter().map(|i| i + 1).collect(),
            },
            other => other.clone(),
        };
        FilterEvent { t: self.t, kind }
    }
}

/// Writes events as line-delimited JSON with 1-based indices.
pub fn write_event_log(events: &[FilterEvent], out: &mut impl Write) -> Result<()> {
    for e in events {
        let line = serde_json::to_string(&e.one_based())
            .map_err(|err| Error::Contract(format!("event serialization: {err}")))?;
        writeln!(out, "{line}").map_err(|err| Error::io("event log", err))?;
    }
    Ok(())
}

/// Filtered estimate at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub t: usize,
    pub mean: Vec<f64>,
    pub support: SupportMask,
    pub ess: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub estimate: Estimate,
    pub residual_sq: f64,
    pub triggered: bool,
    pub events: Vec<FilterEvent>,
    /// Estimates recomputed by a rollback, oldest first; the last one is for
    /// the current step and equals `estimate`.
    pub revisions: Vec<Estimate>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    Oracle,
    /// y(1) is consistent with x = 0 at the trigger quantile.
    ZeroTest,
    Qbp,
    /// The full QBP solve failed; started from the empty support.
    Fallback,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    /// The estimate reported at each time, after that step's own rollback.
    /// Revisions of earlier times made by later rollbacks are not applied.
    pub estimates: Vec<Estimate>,
    pub residuals: Vec<f64>,
    pub events: Vec<FilterEvent>,
    pub init_method: InitMethod,
    pub initial_support: SupportMask,
    pub final_state: FilterState,
}

/// The filter: models, configuration and a root seed.
pub struct Ncpf {
    model: QuadraticMeasurementModel,
    process: ProcessModel,
    phi: PhiOperator,
    config: NcpfConfig,
    seed: u64,
    threshold: f64,
    epsilon: f64,
}

impl Ncpf {
    pub fn new(
        model: QuadraticMeasurementModel,
        process: ProcessModel,
        config: NcpfConfig,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if model.state_dim() != process.dim() {
            return Err(Error::dim("Ncpf process", model.state_dim(), process.dim()));
        }
        let threshold = trigger_threshold(model.measurement_dim(), config.trigger_quantile)?;
        let epsilon = config.resolved_epsilon(&process);
        let phi = lift_model(&model);
        Ok(Ncpf {
            model,
            process,
            phi,
            config,
            seed,
            threshold,
            epsilon,
        })
    }

    pub fn config(&self) -> &NcpfConfig {
        &self.config
    }

    pub fn model(&self) -> &QuadraticMeasurementModel {
        &self.model
    }

    pub fn process(&self) -> &ProcessModel {
        &self.process
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn stream(&self, purpose: u16, index: u64) -> RngStream {
        RngStream::new(self.seed, stream_id(purpose, index))
    }

    /// Estimates s(0) from y(1): empty if y(1) is consistent with x = 0,
    /// otherwise the support of a full QBP solve.
    pub fn initial_support(&self, y1: &[f64]) -> Result<(SupportMask, InitMethod)> {
        let n = self.model.state_dim();
        if residual_sq(y1, &vec![0.0; n], &self.model)? <= self.threshold {
            return Ok((SupportMask::empty(n), InitMethod::ZeroTest));
        }
        match qbp::qbp_full(
            &self.phi,
            y1,
            self.config.lambda,
            self.config.init_mu,
            self.model.noise(),
            &self.config.solver,
        ) {
            Ok(sol) => Ok((sol.support, InitMethod::Qbp)),
            Err(e @ (Error::NoConvergence { .. } | Error::NotPositiveDefinite { .. })) => {
                log::warn!("initial support solve failed ({e}); starting from the empty support");
                Ok((SupportMask::empty(n), InitMethod::Fallback))
            }
            Err(e) => Err(e),
        }
    }

    pub fn initialize(&self, y1: &[f64]) -> Result<(FilterState, InitMethod)> {
        let (s0, method) = self.initial_support(y1)?;
        Ok((self.initialize_with_support(&s0)?, method))
    }

    /// State at t = 1 with a given s(0).
    pub fn initialize_with_support(&self, s0: &SupportMask) -> Result<FilterState> {
        if s0.len() != self.model.state_dim() {
            return Err(Error::dim("initial support", self.model.state_dim(), s0.len()));
        }
        let cloud = init_cloud(s0, &self.process, self.config.particles, &self.stream(PURPOSE_INIT, 0))?;
        Ok(FilterState {
            t: 1,
            cloud,
            tracker: ZeroCrossingTracker::new(s0.len()),
            history: HistoryBuffer::new(self.config.delta_t),
            trigger_resume: 0,
        })
    }

    /// Measurement update with the uniform-reweighting fallback.
    fn filter(&self, cloud: &ParticleCloud, y: &[f64], replay: bool, events: &mut Vec<FilterEvent>) -> Result<ParticleCloud> {
        match cloud.measurement_update(y, &self.model) {
            Ok(c) => Ok(c),
            Err(Error::Degeneracy { t }) => {
                log::warn!("all particle weights vanished at t={t}; reweighting uniformly");
                events.push(FilterEvent {
                    t,
                    kind: EventKind::Degeneracy { replay },
                });
                let m = cloud.len();
                ParticleCloud::from_parts(
                    cloud.support().clone(),
                    cloud.compact_values().to_vec(),
                    vec![1.0; m],
                    cloud.t(),
                    CloudKind::Filtered,
                )
            }
            Err(e) => Err(e),
        }
    }

    fn propagate(&self, filtered: &ParticleCloud) -> Result<ParticleCloud> {
        let t = filtered.t() as u64;
        let mut rng = self.stream(PURPOSE_RESAMPLE, t);
        let resampled = filtered.resample(&mut rng, self.config.resample)?;
        resampled.time_update(&self.process, filtered.support(), &self.stream(PURPOSE_TIME_UPDATE, t))
    }

    /// Sweep with λ halving while the winner is far from rank one.
    fn detect(&self, y: &[f64], support: &SupportMask) -> Result<(qbp::CandidateSweepResult, f64)> {
        let mut lambda = self.config.lambda;
        let mut result = qbp::detect_support_candidate(&self.phi, y, support, lambda, self.model.noise(), &self.config.solver)?;
        for _ in 0..self.config.max_lambda_retries {
            if result.extracted.rank_one_ratio <= self.config.rank_one_tolerance {
                break;
            }
            lambda *= 0.5;
            match qbp::detect_support_candidate(&self.phi, y, support, lambda, self.model.noise(), &self.config.solver) {
                Ok(r) => result = r,
                Err(Error::DetectionFailure) => break,
                Err(e) => return Err(e),
            }
        }
        Ok((result, lambda))
    }

    /// Processes y(t) and advances the state to t + 1.
    pub fn step(&self, state: &mut FilterState, y: &[f64]) -> Result<StepReport> {
        self.step_observed(state, y, &mut |_| {})
    }

    /// [`Ncpf::step`] that also hands the filtered cloud at t to `observer`
    /// (after any rollback at t).
    pub fn step_observed(
        &self,
        state: &mut FilterState,
        y: &[f64],
        observer: &mut dyn FnMut(&ParticleCloud),
    ) -> Result<StepReport> {
        if y.len() != self.model.measurement_dim() {
            return Err(Error::dim("step measurement", self.model.measurement_dim(), y.len()));
        }
        let t = state.t;
        let mut events = Vec::new();
        let support = state.support().clone();
        let filtered = self.filter(&state.cloud, y, false, &mut events)?;
        let mean = filtered.posterior_mean();
        let residual = residual_sq(y, &mean, &self.model)?;
        let tracker_before = state.tracker.clone();

        let removed = state
            .tracker
            .update(&mean, &support, self.epsilon, self.config.delta_t, t);
        let mut new_support = support.clone();
        for &i in &removed {
            new_support.set(i, false);
            events.push(FilterEvent {
                t,
                kind: EventKind::Remove { index: i },
            });
        }

        let mut added = Vec::new();
        let triggered = t >= state.trigger_resume && residual > self.threshold;
        if triggered {
            let outcome = if new_support.cardinality() == new_support.len() {
                "support_full"
            } else {
                match self.detect(y, &new_support) {
                    Ok((sweep, lambda)) => {
                        new_support.set(sweep.best, true);
                        added.push(sweep.best);
                        events.push(FilterEvent {
                            t,
                            kind: EventKind::Add {
                                index: sweep.best,
                                cost: sweep.costs[sweep.best],
                                lambda,
                                rank_one_ratio: sweep.extracted.rank_one_ratio,
                            },
                        });
                        "add"
                    }
                    Err(Error::DetectionFailure) => {
                        log::warn!("support detection failed at t={t}");
                        "detection_failure"
                    }
                    Err(e) => return Err(e),
                }
            };
            events.insert(
                0,
                FilterEvent {
                    t,
                    kind: EventKind::Trigger {
                        residual,
                        threshold: self.threshold,
                        outcome: outcome.to_string(),
                    },
                },
            );
        }

        if new_support == support {
            observer(&filtered);
            let estimate = Estimate {
                t,
                mean,
                support,
                ess: filtered.effective_sample_size(),
            };
            state.history.push(Snapshot {
                cloud: state.cloud.clone(),
                measurement: y.to_vec(),
                tracker: tracker_before,
            });
            state.cloud = self.propagate(&filtered)?;
            state.t = t + 1;
            return Ok(StepReport {
                estimate: estimate.clone(),
                residual_sq: residual,
                triggered,
                events,
                revisions: vec![estimate],
            });
        }

        if !added.is_empty() {
            state.trigger_resume = t + 1 + self.config.add_cooldown;
        }
        state.history.push(Snapshot {
            cloud: state.cloud.clone(),
            measurement: y.to_vec(),
            tracker: tracker_before,
        });
        let revisions = self.replay(state, &new_support, &added, t, &mut events, observer)?;
        let estimate = revisions.last().cloned().expect("replay covers the current step");
        Ok(StepReport {
            estimate,
            residual_sq: residual,
            triggered,
            events,
            revisions,
        })
    }

    /// Re-filters the buffered window with `new_support` applied from its
    /// oldest snapshot. With an unchanged support the state is reproduced
    /// exactly.
    pub fn rollback(&self, state: &mut FilterState, new_support: &SupportMask) -> Result<Vec<Estimate>> {
        if new_support.len() != self.model.state_dim() {
            return Err(Error::dim("rollback support", self.model.state_dim(), new_support.len()));
        }
        if state.history.is_empty() {
            state.cloud = state
                .cloud
                .apply_support_change(new_support, &self.process, &self.stream(PURPOSE_SUPPORT_CHANGE, state.t as u64))?;
            return Ok(Vec::new());
        }
        let t = state.t - 1;
        let added: Vec<usize> = new_support
            .active_indices()
            .into_iter()
            .filter(|&i| !state.support().contains(i))
            .collect();
        let mut events = Vec::new();
        self.replay(state, new_support, &added, t, &mut events, &mut |_| {})
    }

    // Replays every buffered snapshot with the new support and leaves the
    // state at (last buffered time) + 1. A removal reached during the replay
    // restarts it with that index dropped.
    fn replay(
        &self,
        state: &mut FilterState,
        new_support: &SupportMask,
        added: &[usize],
        t_origin: usize,
        events: &mut Vec<FilterEvent>,
        observer: &mut dyn FnMut(&ParticleCloud),
    ) -> Result<Vec<Estimate>> {
        let old_support = state.support().clone();
        let mut support = new_support.clone();
        let snapshots: Vec<Snapshot> = state.history.entries().cloned().collect();
        let from = snapshots[0].cloud.t();
        let to = snapshots.last().unwrap().cloud.t();
        let mut attempt: u64 = 0;
        'restart: loop {
            let change_rng = self.stream(PURPOSE_SUPPORT_CHANGE, (t_origin as u64) << 8 | attempt.min(255));
            let mut cloud = snapshots[0].cloud.apply_support_change(&support, &self.process, &change_rng)?;
            let mut tracker = snapshots[0].tracker.clone();
            for &i in added {
                tracker.reset(i, t_origin + 1);
            }
            let mut replay_events = Vec::new();
            let mut new_history = HistoryBuffer::new(self.config.delta_t);
            let mut estimates = Vec::with_capacity(snapshots.len());
            for snap in &snapshots {
                let tracker_before = tracker.clone();
                let filtered = self.filter(&cloud, &snap.measurement, true, &mut replay_events)?;
                let mean = filtered.posterior_mean();
                let reached = tracker.update(&mean, &support, self.epsilon, self.config.delta_t, snap.cloud.t());
                if !reached.is_empty() {
                    for &i in &reached {
                        support.set(i, false);
                        events.push(FilterEvent {
                            t: snap.cloud.t(),
                            kind: EventKind::Remove { index: i },
                        });
                    }
                    attempt += 1;
                    continue 'restart;
                }
                if snap.cloud.t() == to {
                    observer(&filtered);
                }
                estimates.push(Estimate {
                    t: snap.cloud.t(),
                    mean,
                    support: support.clone(),
                    ess: filtered.effective_sample_size(),
                });
                new_history.push(Snapshot {
                    cloud: cloud.clone(),
                    measurement: snap.measurement.clone(),
                    tracker: tracker_before,
                });
                cloud = self.propagate(&filtered)?;
            }
            if support != old_support || attempt > 0 {
                events.push(FilterEvent {
                    t: t_origin,
                    kind: EventKind::Rollback {
                        from,
                        to,
                        support: support.active_indices(),
                    },
                });
            }
            events.extend(replay_events);
            state.cloud = cloud;
            state.tracker = tracker;
            state.history = new_history;
            state.t = to + 1;
            return Ok(estimates);
        }
    }

    /// Initializes from y(1) (or the given s(0)) and filters every
    /// measurement.
    pub fn run(&self, measurements: &[Vec<f64>], oracle_support: Option<&SupportMask>) -> Result<RunOutput> {
        self.run_observed(measurements, oracle_support, &mut |_| {})
    }

    /// [`Ncpf::run`] with a per-step observer of the filtered cloud.
    pub fn run_observed(
        &self,
        measurements: &[Vec<f64>],
        oracle_support: Option<&SupportMask>,
        observer: &mut dyn FnMut(&ParticleCloud),
    ) -> Result<RunOutput> {
        let first = measurements
            .first()
            .ok_or_else(|| Error::Contract("run needs at least one measurement".into()))?;
        let (mut state, init_method) = match oracle_support {
            Some(s0) => (self.initialize_with_support(s0)?, InitMethod::Oracle),
            None => self.initialize(first)?,
        };
        let initial_support = state.support().clone();
        let mut estimates: Vec<Estimate> = Vec::with_capacity(measurements.len());
        let mut residuals = Vec::with_capacity(measurements.len());
        let mut events = Vec::new();
        for y in measurements {
            let report = self.step_observed(&mut state, y, observer)?;
            estimates.push(report.estimate);
            residuals.push(report.residual_sq);
            events.extend(report.events);
        }
        Ok(RunOutput {
            estimates,
            residuals,
            events,
            init_method,
            initial_support,
            final_state: state,
        })
    }
}

//! Comparison methods: a particle filter over the full state with no support
//! handling, and sparse recovery solved independently at every step.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ProcessModel, QuadraticMeasurementModel, SupportMask};
use crate::numerics::{stream_id, RngStream};
use crate::particle::{init_cloud, CloudKind, ParticleCloud, ResampleScheme};
use crate::qbp::{lift_model, qbp_full};
use crate::sdp::SolverOptions;

const PURPOSE_PF_INIT: u16 = 0x20;
const PURPOSE_PF_TIME_UPDATE: u16 = 0x21;
const PURPOSE_PF_RESAMPLE: u16 = 0x22;

#[derive(Clone, Debug, PartialEq)]
pub enum PfInit {
    /// Every particle starts at this state.
    Oracle(Vec<f64>),
    /// Particles drawn from the process model's p₀.
    Prior,
}

#[derive(Clone, Debug)]
pub struct BaselineResult {
    pub estimates: Vec<Vec<f64>>,
    /// Per-step support estimates (sparse recovery only).
    pub supports: Option<Vec<SupportMask>>,
    /// Steps whose estimate is a fallback (solver failure or degeneracy).
    pub fallback_steps: Vec<usize>,
    pub wall_time_s: f64,
}

/// SIR particle filter over all n coordinates.
pub fn run_full_pf(
    model: &QuadraticMeasurementModel,
    process: &ProcessModel,
    measurements: &[Vec<f64>],
    particles: usize,
    init: &PfInit,
    scheme: ResampleScheme,
    seed: u64,
) -> Result<BaselineResult> {
    let start = Instant::now();
    let n = model.state_dim();
    let full = SupportMask::full(n);
    let mut cloud = match init {
        PfInit::Oracle(x) => {
            if x.len() != n {
                return Err(Error::dim("oracle initial state", n, x.len()));
            }
            ParticleCloud::replicate(full.clone(), x, particles, 1)?
        }
        PfInit::Prior => init_cloud(&full, process, particles, &RngStream::new(seed, stream_id(PURPOSE_PF_INIT, 0)))?,
    };
    let mut estimates = Vec::with_capacity(measurements.len());
    let mut fallback_steps = Vec::new();
    for (k, y) in measurements.iter().enumerate() {
        let t = k + 1;
        let filtered = match cloud.measurement_update(y, model) {
            Ok(c) => c,
            Err(Error::Degeneracy { .. }) => {
                log::warn!("full-state filter degenerate at t={t}; reweighting uniformly");
                fallback_steps.push(t);
                ParticleCloud::from_parts(
                    full.clone(),
                    cloud.compact_values().to_vec(),
                    vec![1.0; cloud.len()],
                    t,
                    CloudKind::Filtered,
                )?
            }
            Err(e) => return Err(e),
        };
        estimates.push(filtered.posterior_mean());
        let mut rng = RngStream::new(seed, stream_id(PURPOSE_PF_RESAMPLE, t as u64));
        let resampled = filtered.resample(&mut rng, scheme)?;
        cloud = resampled.time_update(
            process,
            &full,
            &RngStream::new(seed, stream_id(PURPOSE_PF_TIME_UPDATE, t as u64)),
        )?;
    }
    Ok(BaselineResult {
        estimates,
        supports: None,
        fallback_steps,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Full QBP solved on each measurement alone. Entries outside the estimated
/// support are set to zero. A failed step repeats the previous estimate (zero
/// at t = 1) and is listed in `fallback_steps`.
pub fn run_nlcs_per_step(
    model: &QuadraticMeasurementModel,
    measurements: &[Vec<f64>],
    lambda: f64,
    mu: f64,
    opts: &SolverOptions,
) -> Result<BaselineResult> {
    let start = Instant::now();
    let n = model.state_dim();
    let phi = lift_model(model);
    let solved: Vec<_> = measurements
        .par_iter()
        .map(|y| qbp_full(&phi, y, lambda, mu, model.noise(), opts))
        .collect();
    let mut estimates: Vec<Vec<f64>> = Vec::with_capacity(measurements.len());
    let mut supports = Vec::with_capacity(measurements.len());
    let mut fallback_steps = Vec::new();
    for (k, res) in solved.into_iter().enumerate() {
        match res {
            Ok(sol) => {
                let mut x = sol.state;
                sol.support.apply(&mut x);
                estimates.push(x);
                supports.push(sol.support);
            }
            Err(e @ (Error::NoConvergence { .. } | Error::NotPositiveDefinite { .. })) => {
                log::warn!("sparse recovery failed at t={}: {e}", k + 1);
                fallback_steps.push(k + 1);
                let prev = estimates.last().cloned().unwrap_or_else(|| vec![0.0; n]);
                supports.push(SupportMask::from_bits(prev.iter().map(|v| *v != 0.0).collect()));
                estimates.push(prev);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(BaselineResult {
        estimates,
        supports: Some(supports),
        fallback_steps,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

use rand::RngCore;

use super::measurement::QuadraticMeasurementModel;
use super::process::ProcessModel;
use super::support::{SupportDynamics, SupportMask};
use crate::error::{Error, Result};

/// One simulated time step.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryStep {
    /// 1-based time index.
    pub t: usize,
    pub state: Vec<f64>,
    /// The mask that produced `state`: s(t−1) for t ≥ 2 and s(0) for t = 1.
    /// `state` is exactly zero outside it.
    pub support: SupportMask,
    pub measurement: Vec<f64>,
}

/// Ground-truth states, supports and measurements for t = 1..T.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn measurements(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.measurement.clone()).collect()
    }

    pub fn states(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.state.clone()).collect()
    }

    pub fn state_dim(&self) -> usize {
        self.steps.first().map_or(0, |s| s.state.len())
    }
}

/// Simulates x(t+1) = diag(s(t))·(g(x(t), t) + v(t)), y(t) = h(x(t)) + w(t),
/// starting from x(1) = diag(s(0))·z, z ~ p₀.
pub fn simulate(
    model: &QuadraticMeasurementModel,
    process: &ProcessModel,
    dynamics: SupportDynamics,
    initial_support: &SupportMask,
    steps: usize,
    rng: &mut impl RngCore,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::Contract("simulation needs at least one step".into()));
    }
    let n = model.state_dim();
    if process.dim() != n {
        return Err(Error::dim("simulate process dimension", n, process.dim()));
    }
    if initial_support.len() != n {
        return Err(Error::dim("simulate initial support", n, initial_support.len()));
    }
    dynamics.validate()?;

    let mut support = initial_support.clone();
    let mut x = process.sample_initial(rng);
    support.apply(&mut x);
    let mut out = Vec::with_capacity(steps);
    for t in 1..=steps {
        if t > 1 {
            support = dynamics.step(&support, rng);
            let mut next = process.apply_transition(&x, t - 1);
            let v = process.sample_noise(rng);
            for (xi, vi) in next.iter_mut().zip(&v) {
                *xi += vi;
            }
            support.apply(&mut next);
            x = next;
        }
        let y = model.sample_measurement(&x, rng)?;
        out.push(TrajectoryStep {
            t,
            state: x.clone(),
            support: support.clone(),
            measurement: y,
        });
    }
    Ok(Trajectory { steps: out })
}

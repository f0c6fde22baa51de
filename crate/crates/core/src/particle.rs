//! Support-aware particle clouds.
//!
//! Particles store only the coordinates on the active support, so
//! off-support entries are zero by construction and a likelihood evaluation
//! costs O(N·k²) for k active coordinates instead of O(N·n²).

use std::io::Write;

use rand::{Rng, RngCore};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ProcessModel, QuadraticMeasurementModel, SupportMask};
use crate::numerics::RngStream;

// Fixed chunk size for reductions so sums do not depend on thread count.
const REDUCE_CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudKind {
    /// Approximates p(x(t) | y(1..t−1)).
    Predicted,
    /// Approximates p(x(t) | y(1..t)).
    Filtered,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleScheme {
    Multinomial,
    #[default]
    Systematic,
}

/// M weighted particles on a support, at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleCloud {
    support: SupportMask,
    active: Vec<usize>,
    // Row-major M × k.
    values: Vec<f64>,
    weights: Vec<f64>,
    t: usize,
    kind: CloudKind,
}

impl ParticleCloud {
    /// Assembles a cloud from compact particle values (row-major M×k over the
    /// support's active indices) and unnormalized weights.
    pub fn from_parts(
        support: SupportMask,
        values: Vec<f64>,
        weights: Vec<f64>,
        t: usize,
        kind: CloudKind,
    ) -> Result<Self> {
        let active = support.active_indices();
        let m = weights.len();
        if m == 0 {
            return Err(Error::Contract("a particle cloud needs at least one particle".into()));
        }
        if values.len() != m * active.len() {
            return Err(Error::dim("ParticleCloud values", m * active.len(), values.len()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Contract("particle weights must be finite and nonnegative".into()));
        }
        let total = deterministic_sum(&weights);
        if !(total > 0.0) {
            return Err(Error::Contract("particle weights sum to zero".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(ParticleCloud {
            support,
            active,
            values,
            weights,
            t,
            kind,
        })
    }

    /// M copies of one dense state, uniform weights.
    pub fn replicate(support: SupportMask, state: &[f64], m: usize, t: usize) -> Result<Self> {
        let compact = support.compress(state);
        let values = compact.iter().copied().cycle().take(m * compact.len()).collect();
        Self::from_parts(support, values, vec![1.0; m], t, CloudKind::Predicted)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support(&self) -> &SupportMask {
        &self.support
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn kind(&self) -> CloudKind {
        self.kind
    }

    /// Compact values of particle i on the active set.
    #[inline]
    pub fn particle(&self, i: usize) -> &[f64] {
        let k = self.active.len();
        &self.values[i * k..(i + 1) * k]
    }

    pub fn particle_dense(&self, i: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.support.len()];
        for (&idx, &v) in self.active.iter().zip(self.particle(i)) {
            x[idx] = v;
        }
        x
    }

    pub fn compact_values(&self) -> &[f64] {
        &self.values
    }

    /// Resets all weights to 1/M.
    pub fn reset_weights(&mut self) {
        let m = self.len();
        self.weights.iter_mut().for_each(|w| *w = 1.0 / m as f64);
    }

    /// Σ wᵢ·xᵢ as a dense vector; zero off-support.
    pub fn posterior_mean(&self) -> Vec<f64> {
        let k = self.active.len();
        let mut mean = vec![0.0; self.support.len()];
        if k == 0 {
            return mean;
        }
        let partials: Vec<Vec<f64>> = self
            .values
            .par_chunks(REDUCE_CHUNK * k)
            .zip(self.weights.par_chunks(REDUCE_CHUNK))
            .map(|(vals, ws)| {
                let mut acc = vec![0.0; k];
                for (row, w) in vals.chunks_exact(k).zip(ws) {
                    for (a, v) in acc.iter_mut().zip(row) {
                        *a += w * v;
                    }
                }
                acc
            })
            .collect();
        for part in partials {
            for (&idx, v) in self.active.iter().zip(part) {
                mean[idx] += v;
            }
        }
        mean
    }

    /// 1 / Σ wᵢ².
    pub fn effective_sample_size(&self) -> f64 {
        let sq: Vec<f64> = self.weights.iter().map(|w| w * w).collect();
        1.0 / deterministic_sum(&sq)
    }

    /// Reweights a predicted cloud by N(y; h(xᵢ), R) and normalizes in log space.
    pub fn measurement_update(
        &self,
        y: &[f64],
        model: &QuadraticMeasurementModel,
    ) -> Result<ParticleCloud> {
        if self.kind != CloudKind::Predicted {
            return Err(Error::Contract("measurement update expects a predicted cloud".into()));
        }
        if y.len() != model.measurement_dim() {
            return Err(Error::dim("measurement_update y", model.measurement_dim(), y.len()));
        }
        if self.support.len() != model.state_dim() {
            return Err(Error::dim("measurement_update support", model.state_dim(), self.support.len()));
        }
        let restricted = model.restrict(&self.support);
        let noise = model.noise();
        let k = self.active.len();
        let n_meas = y.len();

        let log_lik: Vec<f64> = (0..self.len())
            .into_par_iter()
            .with_min_len(256)
            .map_init(
                || vec![0.0; n_meas],
                |h, i| {
                    restricted.eval_into(&self.values[i * k..(i + 1) * k], h);
                    for (hj, yj) in h.iter_mut().zip(y) {
                        *hj = yj - *hj;
                    }
                    -0.5 * noise.weighted_sq_norm_unchecked(h)
                },
            )
            .collect();
        let weights = normalize_log_weights(&self.weights, &log_lik).ok_or(Error::Degeneracy { t: self.t })?;
        Ok(ParticleCloud {
            weights,
            kind: CloudKind::Filtered,
            ..self.clone()
        })
    }

    /// Draws M particles from the weighted empirical distribution; weights
    /// become uniform.
    pub fn resample(&self, rng: &mut impl RngCore, scheme: ResampleScheme) -> Result<ParticleCloud> {
        if self.kind != CloudKind::Filtered {
            return Err(Error::Contract("resampling expects a filtered cloud".into()));
        }
        let m = self.len();
        let mut cdf = Vec::with_capacity(m);
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w;
            cdf.push(acc);
        }
        let total = acc;
        let points: Vec<f64> = match scheme {
            ResampleScheme::Systematic => {
                let u0: f64 = rng.random::<f64>() / m as f64;
                (0..m).map(|i| (u0 + i as f64 / m as f64) * total).collect()
            }
            ResampleScheme::Multinomial => {
                let mut u: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * total).collect();
                u.sort_by(f64::total_cmp);
                u
            }
        };
        let k = self.active.len();
        let mut values = Vec::with_capacity(self.values.len());
        let mut j = 0;
        for p in points {
            while j + 1 < m && cdf[j] <= p {
                j += 1;
            }
            values.extend_from_slice(&self.values[j * k..(j + 1) * k]);
        }
        Ok(ParticleCloud {
            values,
            weights: vec![1.0 / m as f64; m],
            ..self.clone()
        })
    }

    /// Propagates xᵢ ← diag(s)·(g(xᵢ, t) + zᵢ), zᵢ ~ pᵥ, where particle i
    /// draws its noise from sub-block i of `rng`. Weights carry over.
    pub fn time_update(
        &self,
        process: &ProcessModel,
        support: &SupportMask,
        rng: &RngStream,
    ) -> Result<ParticleCloud> {
        if self.kind != CloudKind::Filtered {
            return Err(Error::Contract("time update expects a filtered cloud".into()));
        }
        if process.dim() != self.support.len() || support.len() != self.support.len() {
            return Err(Error::dim("time_update dimension", self.support.len(), process.dim()));
        }
        let new_active = support.active_indices();
        let k_old = self.active.len();
        let k_new = new_active.len();
        let noise_std: Option<Vec<f64>> = process
            .noise()
            .diagonal_variances()
            .map(|v| new_active.iter().map(|&i| v[i].sqrt()).collect());
        let fast = process.is_identity() && *support == self.support && noise_std.is_some();

        let mut values = vec![0.0; self.len() * k_new];
        if k_new > 0 {
            values
                .par_chunks_mut(k_new)
                .enumerate()
                .with_min_len(256)
                .for_each(|(i, out)| {
                    let mut prng = rng.substream(i as u64);
                    let old = &self.values[i * k_old..(i + 1) * k_old];
                    if fast {
                        let std = noise_std.as_ref().unwrap();
                        for ((o, &x), &s) in out.iter_mut().zip(old).zip(std) {
                            let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut prng);
                            *o = x + s * z;
                        }
                    } else {
                        let mut dense = vec![0.0; self.support.len()];
                        for (&idx, &v) in self.active.iter().zip(old) {
                            dense[idx] = v;
                        }
                        let mut next = process.apply_transition(&dense, self.t);
                        let z = process.sample_noise(&mut prng);
                        for (xn, zn) in next.iter_mut().zip(&z) {
                            *xn += zn;
                        }
                        for (o, &idx) in out.iter_mut().zip(&new_active) {
                            *o = next[idx];
                        }
                    }
                });
        }
        Ok(ParticleCloud {
            support: support.clone(),
            active: new_active,
            values,
            weights: self.weights.clone(),
            t: self.t + 1,
            kind: CloudKind::Predicted,
        })
    }

    /// Moves the cloud to `new_support`: coordinates entering the support are
    /// drawn independently from the p₀ marginal (particle i uses sub-block i
    /// of `rng`), coordinates leaving it are dropped. Weights are untouched.
    pub fn apply_support_change(
        &self,
        new_support: &SupportMask,
        process: &ProcessModel,
        rng: &RngStream,
    ) -> Result<ParticleCloud> {
        if new_support.len() != self.support.len() {
            return Err(Error::dim("apply_support_change", self.support.len(), new_support.len()));
        }
        if *new_support == self.support {
            return Ok(self.clone());
        }
        let new_active = new_support.active_indices();
        let k_old = self.active.len();
        let k_new = new_active.len();
        // Position of each new coordinate in the old compact layout, if present.
        let source: Vec<Option<usize>> = new_active
            .iter()
            .map(|idx| self.active.iter().position(|a| a == idx))
            .collect();
        let mut values = vec![0.0; self.len() * k_new];
        if k_new > 0 {
            values
                .par_chunks_mut(k_new)
                .enumerate()
                .with_min_len(256)
                .for_each(|(i, out)| {
                    let mut prng = rng.substream(i as u64);
                    let old = &self.values[i * k_old..(i + 1) * k_old];
                    for ((o, src), &idx) in out.iter_mut().zip(&source).zip(&new_active) {
                        *o = match src {
                            Some(p) => old[*p],
                            None => process.sample_initial_marginal(idx, &mut prng),
                        };
                    }
                });
        }
        Ok(ParticleCloud {
            support: new_support.clone(),
            active: new_active,
            values,
            ..self.clone()
        })
    }

    /// CSV snapshot with header `particle_id,index,value,weight`; ids and
    /// indices are 1-based. At most `max_particles` particles are written.
    pub fn write_snapshot_csv(&self, out: &mut impl Write, max_particles: usize) -> std::io::Result<()> {
        writeln!(out, "particle_id,index,value,weight")?;
        for i in 0..self.len().min(max_particles) {
            for (&idx, v) in self.active.iter().zip(self.particle(i)) {
                writeln!(out, "{},{},{},{}", i + 1, idx + 1, v, self.weights[i])?;
            }
        }
        Ok(())
    }
}

/// p₀-distributed cloud: xᵢ = diag(s₀)·zᵢ, zᵢ ~ p₀, uniform weights, t = 1.
pub fn init_cloud(
    s0: &SupportMask,
    process: &ProcessModel,
    m: usize,
    rng: &RngStream,
) -> Result<ParticleCloud> {
    if m == 0 {
        return Err(Error::Contract("particle count must be at least 1".into()));
    }
    if s0.len() != process.dim() {
        return Err(Error::dim("init_cloud", process.dim(), s0.len()));
    }
    let active = s0.active_indices();
    let k = active.len();
    let diagonal = process.initial_cov().is_diagonal();
    let mut values = vec![0.0; m * k];
    if k > 0 {
        values
            .par_chunks_mut(k)
            .enumerate()
            .with_min_len(256)
            .for_each(|(i, out)| {
                let mut prng = rng.substream(i as u64);
                if diagonal {
                    for (o, &idx) in out.iter_mut().zip(&active) {
                        *o = process.sample_initial_marginal(idx, &mut prng);
                    }
                } else {
                    let z = process.sample_initial(&mut prng);
                    for (o, &idx) in out.iter_mut().zip(&active) {
                        *o = z[idx];
                    }
                }
            });
    }
    ParticleCloud::from_parts(s0.clone(), values, vec![1.0; m], 1, CloudKind::Predicted)
}

/// Combines prior weights with log-likelihoods: wᵢ ∝ wᵢ·exp(ℓᵢ), computed
/// with max-subtraction. Returns None when every term is zero.
pub fn normalize_log_weights(prior: &[f64], log_lik: &[f64]) -> Option<Vec<f64>> {
    let log_w: Vec<f64> = prior
        .iter()
        .zip(log_lik)
        .map(|(w, l)| {
            let v = w.ln() + l;
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        })
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let mut w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total = deterministic_sum(&w);
    w.iter_mut().for_each(|v| *v /= total);
    Some(w)
}

/// Sum with a fixed chunked association order, independent of thread count.
pub fn deterministic_sum(values: &[f64]) -> f64 {
    let partials: Vec<f64> = values
        .par_chunks(REDUCE_CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .collect();
    partials.iter().sum()
}

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary support indicator s(t) over the n state coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SupportMask {
    bits: Vec<bool>,
}

impl SupportMask {
    pub fn empty(n: usize) -> Self {
        SupportMask {
            bits: vec![false; n],
        }
    }

    pub fn full(n: usize) -> Self {
        SupportMask {
            bits: vec![true; n],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        SupportMask { bits }
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut mask = Self::empty(n);
        for &i in indices {
            if i >= n {
                return Err(Error::Contract(format!(
                    "support index {i} out of range for dimension {n}"
                )));
            }
            mask.bits[i] = true;
        }
        Ok(mask)
    }

    /// Dimension n.
    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn cardinality(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, active: bool) {
        self.bits[i] = active;
    }

    pub fn toggle(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Active indices in increasing order.
    pub fn active_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.then_some(i))
            .collect()
    }

    pub fn inactive_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, b)| (!b).then_some(i))
            .collect()
    }

    pub fn hamming(&self, other: &SupportMask) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn complement(&self) -> SupportMask {
        SupportMask {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Zeroes every coordinate of `x` outside the support.
    pub fn apply(&self, x: &mut [f64]) {
        for (v, &b) in x.iter_mut().zip(&self.bits) {
            if !b {
                *v = 0.0;
            }
        }
    }

    /// Scatters values given on the active set into a dense length-n vector.
    pub fn densify(&self, values: &[f64]) -> Result<Vec<f64>> {
        let active = self.active_indices();
        if values.len() != active.len() {
            return Err(Error::dim("SupportMask::densify", active.len(), values.len()));
        }
        let mut x = vec![0.0; self.len()];
        for (&i, &v) in active.iter().zip(values) {
            x[i] = v;
        }
        Ok(x)
    }

    /// Gathers the active coordinates of a dense vector.
    pub fn compress(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.bits)
            .filter_map(|(v, b)| b.then_some(*v))
            .collect()
    }
}

/// How the true support evolves between simulation steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportDynamics {
    Static,
    /// One uniformly chosen element toggles with probability `flip_prob` per step.
    Flip { flip_prob: f64 },
    /// Every element independently keeps its value with probability `alpha`.
    Markov { alpha: f64 },
}

impl SupportDynamics {
    pub fn validate(&self) -> Result<()> {
        let p = match *self {
            SupportDynamics::Static => return Ok(()),
            SupportDynamics::Flip { flip_prob } => flip_prob,
            SupportDynamics::Markov { alpha } => alpha,
        };
        if (0.0..=1.0).contains(&p) {
            Ok(())
        } else {
            Err(Error::Config(format!("support dynamics probability {p} outside [0, 1]")))
        }
    }

    pub fn step(&self, s: &SupportMask, rng: &mut impl RngCore) -> SupportMask {
        match *self {
            SupportDynamics::Static => s.clone(),
            SupportDynamics::Flip { flip_prob } => step_support_flip(s, flip_prob, rng),
            SupportDynamics::Markov { alpha } => step_support_markov(s, alpha, rng),
        }
    }
}

/// With probability `flip_prob`, toggles one uniformly chosen element.
pub fn step_support_flip(s: &SupportMask, flip_prob: f64, rng: &mut impl RngCore) -> SupportMask {
    let mut out = s.clone();
    if s.is_empty() {
        return out;
    }
    let u: f64 = rng.random();
    if u < flip_prob {
        let i = rng.random_range(0..s.len());
        out.toggle(i);
    }
    out
}

/// Each element independently stays with probability `alpha`, toggles otherwise.
pub fn step_support_markov(s: &SupportMask, alpha: f64, rng: &mut impl RngCore) -> SupportMask {
    let mut out = s.clone();
    for i in 0..s.len() {
        let u: f64 = rng.random();
        if u >= alpha {
            out.toggle(i);
        }
    }
    out
}

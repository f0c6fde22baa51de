//! Versioned scenario files.
//!
//! ```json
//! {
//!   "version": 1,
//!   "name": "desk",
//!   "seed": 1,
//!   "steps": 50,
//!   "model": { "random": { "n": 30, "measurements": 20, "noise_variance": 0.01 } },
//!   "process": { "noise_variance": 0.01, "initial_variance": 0.09 },
//!   "support_dynamics": { "kind": "flip", "flip_prob": 0.03 },
//!   "initial_support": [],
//!   "ncpf": { "particles": 10000, "lambda": 1.0, "delta_t": 3 },
//!   "baselines": { "pf_particles": 10000, "pf_oracle_init": true, "nlcs_mu": 0.1 }
//! }
//! ```
//!
//! Indices in `initial_support` are 1-based. A `model` may instead be
//! `{ "file": "model.json" }` (relative to the scenario file) or
//! `{ "inline": { ...model document... } }`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::NcpfConfig;
use crate::model::{
    random_model, simulate, ModelDocument, ProcessModel, QuadraticMeasurementModel, SupportDynamics,
    SupportMask, Trajectory,
};
use crate::numerics::{stream_id, Covariance, RngStream};

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

/// Environment variable that replaces the scenario seed.
pub const SEED_ENV: &str = "NCPF_SEED";

const PURPOSE_MODEL: u16 = 0x01;
const PURPOSE_SIMULATE: u16 = 0x02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSource {
    Random {
        n: usize,
        measurements: usize,
        noise_variance: f64,
    },
    File(PathBuf),
    Inline(ModelDocument),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub noise_variance: f64,
    pub initial_variance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSpec {
    pub full_pf: bool,
    pub nlcs: bool,
    /// Defaults to the filter's particle count.
    pub pf_particles: Option<usize>,
    /// Start the full-state filter at the true x(1).
    pub pf_oracle_init: bool,
    pub nlcs_mu: f64,
}

impl Default for BaselineSpec {
    fn default() -> Self {
        BaselineSpec {
            full_pf: true,
            nlcs: true,
            pf_particles: None,
            pf_oracle_init: true,
            nlcs_mu: crate::qbp::DEFAULT_QBP_MU,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    pub steps: usize,
    pub model: ModelSource,
    pub process: ProcessSpec,
    pub support_dynamics: SupportDynamics,
    #[serde(default)]
    pub initial_support: Vec<usize>,
    #[serde(default)]
    pub ncpf: NcpfConfig,
    #[serde(default)]
    pub baselines: BaselineSpec,
    /// Directory used to resolve relative file references.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scenario {
    /// The desk-scale setup: n = 30, N = 20, noise 0.01·I, flip
    /// probability 0.03, T = 50, empty initial support, M = 10⁴.
    pub fn desk(seed: u64) -> Self {
        Scenario {
            version: SCENARIO_FORMAT_VERSION,
            name: "desk".into(),
            seed,
            steps: 50,
            model: ModelSource::Random {
                n: 30,
                measurements: 20,
                noise_variance: 0.01,
            },
            process: ProcessSpec {
                noise_variance: 0.01,
                initial_variance: 0.09,
            },
            support_dynamics: SupportDynamics::Flip { flip_prob: 0.03 },
            initial_support: Vec::new(),
            ncpf: NcpfConfig::default(),
            baselines: BaselineSpec::default(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Loads a scenario file, applying [`SEED_ENV`] if set.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut scenario = Self::from_json(&text)?;
        scenario.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        scenario.apply_seed_override()?;
        Ok(scenario)
    }

    pub fn apply_seed_override(&mut self) -> Result<()> {
        if let Ok(value) = std::env::var(SEED_ENV) {
            self.seed = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={value:?} is not an unsigned integer")))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCENARIO_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "scenario version {} unsupported (expected {SCENARIO_FORMAT_VERSION})",
                self.version
            )));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if !(self.process.noise_variance >= 0.0) || !(self.process.initial_variance >= 0.0) {
            return Err(Error::Config("process variances must be nonnegative".into()));
        }
        if let ModelSource::Random {
            n,
            measurements,
            noise_variance,
        } = &self.model
        {
            if *n == 0 || *measurements == 0 || !(*noise_variance > 0.0) {
                return Err(Error::Config("random model needs n, N ≥ 1 and positive noise".into()));
            }
        }
        if self.initial_support.iter().any(|&i| i == 0) {
            return Err(Error::Config("initial_support indices are 1-based".into()));
        }
        self.support_dynamics.validate()?;
        self.ncpf.validate()
    }

    pub fn build_model(&self) -> Result<QuadraticMeasurementModel> {
        match &self.model {
            ModelSource::Random {
                n,
                measurements,
                noise_variance,
            } => {
                let mut rng = RngStream::new(self.seed, stream_id(PURPOSE_MODEL, 0));
                random_model(*n, *measurements, Covariance::scaled_identity(*measurements, *noise_variance)?, &mut rng)
            }
            ModelSource::File(path) => QuadraticMeasurementModel::load(&self.base_dir.join(path)),
            ModelSource::Inline(doc) => doc.clone().try_into(),
        }
    }

    pub fn build_process(&self, n: usize) -> Result<ProcessModel> {
        ProcessModel::random_walk(n, self.process.noise_variance, self.process.initial_variance)
    }

    pub fn initial_mask(&self, n: usize) -> Result<SupportMask> {
        let zero_based: Vec<usize> = self.initial_support.iter().map(|i| i - 1).collect();
        SupportMask::from_indices(n, &zero_based).map_err(|e| Error::Config(e.to_string()))
    }

    /// Model, process and simulated trajectory for this scenario's seed.
    pub fn realize(&self) -> Result<Realization> {
        let model = self.build_model()?;
        let process = self.build_process(model.state_dim())?;
        let s0 = self.initial_mask(model.state_dim())?;
        let mut rng = RngStream::new(self.seed, stream_id(PURPOSE_SIMULATE, 0));
        let trajectory = simulate(&model, &process, self.support_dynamics, &s0, self.steps, &mut rng)?;
        Ok(Realization {
            model,
            process,
            trajectory,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Realization {
    pub model: QuadraticMeasurementModel,
    pub process: ProcessModel,
    pub trajectory: Trajectory,
}

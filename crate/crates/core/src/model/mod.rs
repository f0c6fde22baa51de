//! Quadratic measurement models, support dynamics, process models and the
//! ground-truth simulator.

mod json;
mod measurement;
mod process;
mod support;
mod trajectory;

pub use json::{ModelDocument, NoiseDocument, MODEL_FORMAT_VERSION};
pub use measurement::{random_model, QuadraticMeasurementModel, RestrictedModel};
pub use process::{ProcessModel, Transition, TransitionFn};
pub use support::{step_support_flip, step_support_markov, SupportDynamics, SupportMask};
pub use trajectory::{simulate, Trajectory, TrajectoryStep};

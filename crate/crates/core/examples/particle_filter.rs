//! The particle primitives on a fixed support: initialize, weight, resample,
//! propagate.

use ncpf::model::{random_model, simulate, ProcessModel, SupportDynamics, SupportMask};
use ncpf::numerics::{Covariance, RngStream};
use ncpf::particle::{init_cloud, ResampleScheme};

fn main() -> ncpf::Result<()> {
    let n = 6;
    let model = random_model(n, 6, Covariance::scaled_identity(6, 0.01)?, &mut RngStream::new(5, 0))?;
    let process = ProcessModel::random_walk(n, 0.01, 0.09)?;
    let support = SupportMask::from_indices(n, &[0, 3])?;
    let traj = simulate(&model, &process, SupportDynamics::Static, &support, 15, &mut RngStream::new(5, 1))?;

    let mut cloud = init_cloud(&support, &process, 4000, &RngStream::new(5, 2))?;
    for step in &traj.steps {
        let filtered = cloud.measurement_update(&step.measurement, &model)?;
        let mean = filtered.posterior_mean();
        println!(
            "t={:>2} ess={:>7.1}  x1 {:+.3} ({:+.3})  x4 {:+.3} ({:+.3})",
            step.t,
            filtered.effective_sample_size(),
            mean[0],
            step.state[0],
            mean[3],
            step.state[3]
        );
        let resampled = filtered.resample(&mut RngStream::new(5, 100 + step.t as u64), ResampleScheme::Systematic)?;
        cloud = resampled.time_update(&process, &support, &RngStream::new(5, 200 + step.t as u64))?;
    }
    Ok(())
}

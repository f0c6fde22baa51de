//! Draws a random quadratic measurement model and simulates a sparse random
//! walk with flipping support.

use ncpf::model::{random_model, simulate, ProcessModel, SupportDynamics, SupportMask};
use ncpf::numerics::{Covariance, RngStream};

fn main() -> ncpf::Result<()> {
    let (n, n_meas) = (12, 8);
    let model = random_model(n, n_meas, Covariance::scaled_identity(n_meas, 0.01)?, &mut RngStream::new(3, 1))?;
    let process = ProcessModel::random_walk(n, 0.01, 0.09)?;
    let s0 = SupportMask::from_indices(n, &[1, 6])?;
    let traj = simulate(&model, &process, SupportDynamics::Flip { flip_prob: 0.05 }, &s0, 20, &mut RngStream::new(3, 2))?;

    for step in &traj.steps {
        let active: Vec<String> = step
            .support
            .active_indices()
            .iter()
            .map(|&i| format!("x{}={:+.3}", i + 1, step.state[i]))
            .collect();
        println!("t={:>2}  {}", step.t, active.join("  "));
    }
    Ok(())
}

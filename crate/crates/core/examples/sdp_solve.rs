//! Solves the lifted trace-regularized least-squares SDP with ADMM and prints
//! the residual trace.

use ncpf::model::random_model;
use ncpf::numerics::{Covariance, RngStream};
use ncpf::qbp::{extract_state, lift_model};
use ncpf::sdp::{solve, SdpProblem, SolverOptions};

fn main() -> ncpf::Result<()> {
    let n = 5;
    let model = random_model(n, 12, Covariance::scaled_identity(12, 1e-4)?, &mut RngStream::new(7, 0))?;
    let truth = [0.8, -0.4, 0.0, 0.3, 0.0];
    let y = model.eval_measurement(&truth)?;

    let problem = SdpProblem::new(lift_model(&model), y, model.noise().clone(), 100.0, 0.0);
    let opts = SolverOptions { trace: true, ..Default::default() };
    let (x, stats) = solve(&problem, &opts)?;

    println!("converged={} after {} iterations, objective {:.6}", stats.converged, stats.iterations, stats.objective);
    for row in stats.trace.iter().step_by((stats.trace.len() / 8).max(1)) {
        println!("  {row:?}");
    }
    let est = extract_state(&x)?;
    println!("truth    {truth:?}");
    println!("estimate {:?}", est.state.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>());
    Ok(())
}

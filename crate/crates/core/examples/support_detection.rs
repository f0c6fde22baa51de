//! One new support element is found by sweeping the restricted SDP over every
//! inactive index and keeping the cheapest.

use ncpf::model::{random_model, SupportMask};
use ncpf::numerics::{Covariance, RngStream};
use ncpf::qbp::{detect_support_candidate, lift_model, qbp_full, DEFAULT_QBP_MU};
use ncpf::sdp::SolverOptions;

fn main() -> ncpf::Result<()> {
    let model = random_model(10, 8, Covariance::scaled_identity(8, 1e-4)?, &mut RngStream::new(11, 0))?;
    let mut x = vec![0.0; 10];
    x[2] = 0.35;
    x[8] = -0.25;
    let y = model.eval_measurement(&x)?;
    let phi = lift_model(&model);

    let known = SupportMask::from_indices(10, &[2])?;
    let sweep = detect_support_candidate(&phi, &y, &known, 1.0, model.noise(), &SolverOptions::default())?;
    for (j, c) in sweep.costs.iter().enumerate() {
        if c.is_finite() {
            println!("c({:>2}) = {c:.5}", j + 1);
        }
    }
    println!("selected index {} (truth: 9)", sweep.best + 1);

    let full = qbp_full(&phi, &y, 1.0, DEFAULT_QBP_MU, model.noise(), &SolverOptions::default())?;
    println!("unrestricted recovery support: {:?}", full.support.active_indices().iter().map(|i| i + 1).collect::<Vec<_>>());
    Ok(())
}

//! Quadratic measurements become linear in the lifted matrix [1; x][1 xᵀ].

use ncpf::numerics::RngStream;
use ncpf::model::random_model;
use ncpf::numerics::Covariance;
use ncpf::qbp::{extract_state, lift, lift_model};

fn main() -> ncpf::Result<()> {
    let model = random_model(4, 5, Covariance::scaled_identity(5, 0.01)?, &mut RngStream::new(1, 0))?;
    let x = [0.5, 0.0, -1.25, 0.75];

    let phi = lift_model(&model);
    let lifted = phi.apply(&lift(&x))?;
    let direct = model.eval_measurement(&x)?;
    for (i, (a, b)) in lifted.iter().zip(&direct).enumerate() {
        println!("y{}: trace form {a:+.12}  direct {b:+.12}", i + 1);
    }

    let back = extract_state(&lift(&x))?;
    println!("recovered x = {:?} (rank-one ratio {:.1e})", back.state, back.rank_one_ratio);
    Ok(())
}

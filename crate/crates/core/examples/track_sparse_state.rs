//! Tracks a state whose support changes over time, printing support events as
//! the filter commits them.

use ncpf::bench::{compute_metrics, Scenario};
use ncpf::filter::{EventKind, Ncpf};

fn main() -> ncpf::Result<()> {
    env_logger::init();
    let scenario = Scenario::desk(2);
    let r = scenario.realize()?;
    let filter = Ncpf::new(r.model, r.process, scenario.ncpf.clone(), scenario.seed)?;
    let out = filter.run(&r.trajectory.measurements(), None)?;

    let one_based = |s: &ncpf::model::SupportMask| s.active_indices().iter().map(|i| i + 1).collect::<Vec<_>>();
    println!("initial support via {:?}: {:?}", out.init_method, one_based(&out.initial_support));
    for e in &out.events {
        match &e.kind {
            EventKind::Add { index, cost, .. } => println!("t={:>2} add x{} (cost {cost:.3})", e.t, index + 1),
            EventKind::Remove { index } => println!("t={:>2} remove x{}", e.t, index + 1),
            _ => {}
        }
    }
    for (step, est) in r.trajectory.steps.iter().zip(&out.estimates).step_by(10) {
        println!("t={:>2} truth {:?} estimate {:?}", step.t, one_based(&step.support), one_based(&est.support));
    }

    let means: Vec<Vec<f64>> = out.estimates.into_iter().map(|e| e.mean).collect();
    let m = compute_metrics("ncpf", &r.trajectory, &means, None)?;
    println!("rmse_active {:.4}  mean F1 {:.3}", m.rmse_active, m.mean_f1);
    Ok(())
}

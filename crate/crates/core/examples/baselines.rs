//! Full-state particle filter and per-step sparse recovery next to the
//! support-aware filter on a small scenario.

use ncpf::baselines::{run_full_pf, run_nlcs_per_step, PfInit};
use ncpf::bench::{compute_metrics, Scenario};
use ncpf::filter::{Ncpf, NcpfConfig};
use ncpf::model::ProcessModel;

fn main() -> ncpf::Result<()> {
    let mut scenario = Scenario::desk(3);
    scenario.steps = 25;
    let r = scenario.realize()?;
    let ys = r.trajectory.measurements();
    let process: &ProcessModel = &r.process;

    let ncpf = Ncpf::new(r.model.clone(), process.clone(), NcpfConfig { particles: 3000, ..scenario.ncpf.clone() }, 3)?
        .run(&ys, None)?;
    let ncpf_means: Vec<Vec<f64>> = ncpf.estimates.into_iter().map(|e| e.mean).collect();
    let pf = run_full_pf(&r.model, process, &ys, 3000, &PfInit::Oracle(r.trajectory.steps[0].state.clone()), scenario.ncpf.resample, 3)?;
    let nlcs = run_nlcs_per_step(&r.model, &ys, 1.0, scenario.baselines.nlcs_mu, &scenario.ncpf.solver)?;

    for (label, est) in [("ncpf", &ncpf_means), ("pf", &pf.estimates), ("nlcs", &nlcs.estimates)] {
        let m = compute_metrics(label, &r.trajectory, est, None)?;
        println!("{label:<5} rmse_total {:.4}  rmse_active {:.4}  F1 {:.3}", m.rmse_total, m.rmse_active, m.mean_f1);
    }
    Ok(())
}

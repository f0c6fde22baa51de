//! Writes SVG plots of two state entries with particle clouds behind the
//! estimate. Output goes to `target/plot_run/`.

use std::path::Path;

use ncpf::bench::io::{push_particle_rows, write_estimates_csv, write_particles_csv, write_trajectory_csv};
use ncpf::bench::{cmd_plot, Scenario};
use ncpf::filter::Ncpf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = Path::new("target/plot_run");
    std::fs::create_dir_all(out)?;

    let scenario = Scenario::desk(2);
    let r = scenario.realize()?;
    let filter = Ncpf::new(r.model, r.process, scenario.ncpf.clone(), scenario.seed)?;
    let mut rows = Vec::new();
    let run = filter.run_observed(&r.trajectory.measurements(), None, &mut |c| push_particle_rows(&mut rows, c, 200))?;

    let means: Vec<Vec<f64>> = run.estimates.iter().map(|e| e.mean.clone()).collect();
    write_trajectory_csv(&out.join("trajectory.csv"), &r.trajectory)?;
    write_estimates_csv(&out.join("ncpf_estimates.csv"), &means)?;
    write_particles_csv(&out.join("ncpf_particles.csv"), &rows)?;

    // Plot the two entries that are active longest.
    let mut active: Vec<(usize, usize)> = (0..means[0].len())
        .map(|i| (r.trajectory.steps.iter().filter(|s| s.support.contains(i)).count(), i + 1))
        .collect();
    active.sort_unstable_by(|a, b| b.cmp(a));
    let indices: Vec<usize> = active.iter().take(2).map(|&(_, i)| i).collect();
    for f in cmd_plot(
        Some(&out.join("trajectory.csv")),
        &out.join("ncpf_estimates.csv"),
        Some(&out.join("ncpf_particles.csv")),
        &indices,
        "ncpf",
        out,
    )? {
        println!("{}", f.display());
    }
    Ok(())
}

//! The subcommands of `ncpf-bench`, as library functions.
//!
//! Every file a command writes is a deterministic function of its inputs,
//! except the `*_timing.json` / `timing.csv` files, which hold wall times.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{run_full_pf, run_nlcs_per_step, PfInit};
use crate::error::{Error, Result};
use crate::filter::{write_event_log, Ncpf};
use crate::model::{QuadraticMeasurementModel, Trajectory};

use super::io::{
    push_particle_rows, read_estimates_csv, read_particles_csv, read_trajectory_csv, write_estimates_csv,
    write_particles_csv, write_text, write_trajectory_csv,
};
use super::metrics::{compute_metrics, ChangeKind, Detection, MetricsReport};
use super::plot::{render_svg, PlotInput};
use super::scenario::Scenario;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const MODEL_FILE: &str = "model.json";
pub const SCENARIO_FILE: &str = "scenario.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ncpf,
    Pf,
    Nlcs,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ncpf => "ncpf",
            Method::Pf => "pf",
            Method::Nlcs => "nlcs",
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `trajectory.csv`, `model.json` and the resolved `scenario.json`.
pub fn cmd_simulate(scenario: &Scenario, out_dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(out_dir)?;
    let realization = scenario.realize()?;
    let trajectory_path = out_dir.join(TRAJECTORY_FILE);
    let model_path = out_dir.join(MODEL_FILE);
    let scenario_path = out_dir.join(SCENARIO_FILE);
    write_trajectory_csv(&trajectory_path, &realization.trajectory)?;
    realization.model.save(&model_path)?;
    write_text(&scenario_path, &(scenario.to_json() + "\n"))?;
    Ok(vec![trajectory_path, model_path, scenario_path])
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the particle count of the filter and the full-state filter.
    pub particles: Option<usize>,
    /// Particles per step written to `<method>_particles.csv`; 0 disables.
    pub snapshot_particles: usize,
    /// Model file; defaults to `model.json` next to the trajectory, then to
    /// the scenario's model.
    pub model: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub method: String,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub estimates: Vec<Vec<f64>>,
    pub wall_time_s: f64,
    pub files: Vec<PathBuf>,
}

fn resolve_model(scenario: &Scenario, trajectory_path: &Path, opts: &RunOptions) -> Result<QuadraticMeasurementModel> {
    if let Some(path) = &opts.model {
        return QuadraticMeasurementModel::load(path);
    }
    let sibling = trajectory_path.parent().unwrap_or(Path::new(".")).join(MODEL_FILE);
    if sibling.exists() {
        QuadraticMeasurementModel::load(&sibling)
    } else {
        scenario.build_model()
    }
}

/// Runs one method on a trajectory's measurements and writes
/// `<method>_estimates.csv`, `<method>_events.jsonl` and
/// `<method>_timing.json` (plus `<method>_particles.csv` when requested).
pub fn cmd_run(
    method: Method,
    scenario: &Scenario,
    trajectory_path: &Path,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<RunOutput> {
    create_dir(out_dir)?;
    let trajectory = read_trajectory_csv(trajectory_path)?;
    let model = resolve_model(scenario, trajectory_path, opts)?;
    if model.state_dim() != trajectory.state_dim() || model.measurement_dim() != trajectory.steps[0].measurement.len() {
        return Err(Error::Config(format!(
            "model ({}×{}) does not match trajectory ({}×{})",
            model.state_dim(),
            model.measurement_dim(),
            trajectory.state_dim(),
            trajectory.steps[0].measurement.len()
        )));
    }
    let process = scenario.build_process(model.state_dim())?;
    let measurements = trajectory.measurements();
    let name = method.name();
    let mut files = Vec::new();
    let mut particle_rows = Vec::new();
    let mut event_lines = Vec::new();

    let start = Instant::now();
    let estimates = match method {
        Method::Ncpf => {
            let mut config = scenario.ncpf.clone();
            if let Some(m) = opts.particles {
                config.particles = m;
            }
            let filter = Ncpf::new(model, process, config, scenario.seed)?;
            let keep = opts.snapshot_particles;
            let out = filter.run_observed(&measurements, None, &mut |cloud| {
                if keep > 0 {
                    push_particle_rows(&mut particle_rows, cloud, keep);
                }
            })?;
            write_event_log(&out.events, &mut event_lines)?;
            out.estimates.into_iter().map(|e| e.mean).collect()
        }
        Method::Pf => {
            let particles = opts
                .particles
                .or(scenario.baselines.pf_particles)
                .unwrap_or(scenario.ncpf.particles);
            let init = if scenario.baselines.pf_oracle_init {
                PfInit::Oracle(trajectory.steps[0].state.clone())
            } else {
                PfInit::Prior
            };
            let result = run_full_pf(&model, &process, &measurements, particles, &init, scenario.ncpf.resample, scenario.seed)?;
            for t in &result.fallback_steps {
                event_lines.extend_from_slice(
                    format!("{{\"t\":{t},\"event\":\"degeneracy\",\"payload\":{{\"replay\":false}}}}\n").as_bytes(),
                );
            }
            result.estimates
        }
        Method::Nlcs => {
            let result = run_nlcs_per_step(
                &model,
                &measurements,
                scenario.ncpf.lambda,
                scenario.baselines.nlcs_mu,
                &scenario.ncpf.solver,
            )?;
            for t in &result.fallback_steps {
                event_lines.extend_from_slice(
                    format!("{{\"t\":{t},\"event\":\"solver_failure\",\"payload\":{{\"fallback\":\"previous_estimate\"}}}}\n")
                        .as_bytes(),
                );
            }
            result.estimates
        }
    };
    let wall_time_s = start.elapsed().as_secs_f64();

    let est_path = out_dir.join(format!("{name}_estimates.csv"));
    write_estimates_csv(&est_path, &estimates)?;
    files.push(est_path);
    let events_path = out_dir.join(format!("{name}_events.jsonl"));
    std::fs::write(&events_path, &event_lines).map_err(|e| Error::io(&events_path, e))?;
    files.push(events_path);
    if opts.snapshot_particles > 0 && method == Method::Ncpf {
        let p = out_dir.join(format!("{name}_particles.csv"));
        write_particles_csv(&p, &particle_rows)?;
        files.push(p);
    }
    let timing_path = out_dir.join(format!("{name}_timing.json"));
    let timing = Timing {
        method: name.to_string(),
        wall_time_s,
    };
    write_text(&timing_path, &(serde_json::to_string_pretty(&timing).expect("timing serializes") + "\n"))?;
    files.push(timing_path);
    Ok(RunOutput {
        estimates,
        wall_time_s,
        files,
    })
}

fn timing_for(estimates_path: &Path) -> Option<f64> {
    let name = estimates_path.file_name()?.to_str()?;
    let stem = name.strip_suffix("_estimates.csv")?;
    let path = estimates_path.with_file_name(format!("{stem}_timing.json"));
    let text = std::fs::read_to_string(path).ok()?;
    let value: serde_json::Value = serde_json::from_str(&text).ok()?;
    value.get("wall_time_s")?.as_f64()
}

#[derive(Clone, Debug)]
pub struct CompareOutput {
    pub reports: Vec<MetricsReport>,
    pub table: String,
    pub files: Vec<PathBuf>,
}

/// Metrics for each `(label, estimates.csv)` against one trajectory. Writes
/// `metrics.csv`, `latency.csv` and `timing.csv`.
pub fn cmd_compare(
    scenario: &Scenario,
    trajectory_path: &Path,
    runs: &[(String, PathBuf)],
    out_dir: &Path,
) -> Result<CompareOutput> {
    if runs.is_empty() {
        return Err(Error::Config("compare needs at least one run".into()));
    }
    create_dir(out_dir)?;
    let trajectory = read_trajectory_csv(trajectory_path)?;
    let bound = scenario.ncpf.delta_t + 2;
    let mut reports = Vec::with_capacity(runs.len());
    for (label, path) in runs {
        let estimates = read_estimates_csv(path)?;
        if estimates.len() != trajectory.len() || estimates[0].len() != trajectory.state_dim() {
            return Err(Error::Contract(format!(
                "{} has {}×{} estimates but the trajectory is {}×{}",
                path.display(),
                estimates.len(),
                estimates[0].len(),
                trajectory.len(),
                trajectory.state_dim()
            )));
        }
        reports.push(compute_metrics(label, &trajectory, &estimates, timing_for(path))?);
    }

    let mut metrics_csv = String::from(
        "method,rmse_total,rmse_active,mean_precision,mean_recall,mean_f1,additions,additions_within_bound,missed,censored\n",
    );
    let mut latency_csv = String::from("method,t,index,kind,latency\n");
    let mut timing_csv = String::from("method,wall_time_s\n");
    let mut table = format!(
        "{:<10} {:>11} {:>11} {:>9} {:>9} {:>9} {:>14}\n",
        "method", "rmse_total", "rmse_active", "precision", "recall", "f1", format!("adds<={bound}")
    );
    for r in &reports {
        let adds: Vec<_> = r.events.iter().filter(|e| e.kind == ChangeKind::Addition).collect();
        let within = adds
            .iter()
            .filter(|e| matches!(e.detection, Detection::Latency(l) if l <= bound))
            .count();
        let missed = adds.iter().filter(|e| e.detection == Detection::Missed).count();
        let censored = adds.iter().filter(|e| e.detection == Detection::Censored).count();
        let _ = writeln!(
            metrics_csv,
            "{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.rmse_total,
            r.rmse_active,
            r.mean_precision,
            r.mean_recall,
            r.mean_f1,
            adds.len(),
            within,
            missed,
            censored
        );
        for e in &r.events {
            let latency = match e.detection {
                Detection::Latency(l) => l.to_string(),
                Detection::Missed => "missed".into(),
                Detection::Censored => "censored".into(),
            };
            let kind = match e.kind {
                ChangeKind::Addition => "addition",
                ChangeKind::Removal => "removal",
            };
            let _ = writeln!(latency_csv, "{},{},{},{},{}", r.method, e.t, e.index + 1, kind, latency);
        }
        let _ = writeln!(
            timing_csv,
            "{},{}",
            r.method,
            r.wall_time_s.map_or("NA".to_string(), |w| w.to_string())
        );
        let _ = writeln!(
            table,
            "{:<10} {:>11.4} {:>11.4} {:>9.3} {:>9.3} {:>9.3} {:>14}",
            r.method,
            r.rmse_total,
            r.rmse_active,
            r.mean_precision,
            r.mean_recall,
            r.mean_f1,
            format!("{within}/{}", adds.len() - censored)
        );
    }
    let files = vec![out_dir.join("metrics.csv"), out_dir.join("latency.csv"), out_dir.join("timing.csv")];
    write_text(&files[0], &metrics_csv)?;
    write_text(&files[1], &latency_csv)?;
    write_text(&files[2], &timing_csv)?;
    Ok(CompareOutput { reports, table, files })
}

/// One SVG per requested 1-based index, named `x<index>.svg`.
pub fn cmd_plot(
    trajectory_path: Option<&Path>,
    estimates_path: &Path,
    particles_path: Option<&Path>,
    indices: &[usize],
    label: &str,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    create_dir(out_dir)?;
    let trajectory: Option<Trajectory> = trajectory_path.map(read_trajectory_csv).transpose()?;
    let estimates = read_estimates_csv(estimates_path)?;
    if let Some(tr) = &trajectory {
        if tr.len() != estimates.len() || tr.state_dim() != estimates[0].len() {
            return Err(Error::Contract("estimates and trajectory have different shapes".into()));
        }
    }
    let particles = particles_path.map(read_particles_csv).transpose()?;
    let input = PlotInput {
        trajectory: trajectory.as_ref(),
        estimates: &estimates,
        particles: particles.as_deref(),
        label,
    };
    let mut files = Vec::with_capacity(indices.len());
    for &index in indices {
        let svg = render_svg(&input, index)?;
        let path = out_dir.join(format!("x{index}.svg"));
        write_text(&path, &svg)?;
        files.push(path);
    }
    Ok(files)
}

//! Command-line front end: `simulate`, `run`, `compare`, `plot`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 I/O
//! error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ncpf::bench::{cmd_compare, cmd_plot, cmd_run, cmd_simulate, Method, RunOptions, Scenario};
use ncpf::Error;

/// Particle count used by `--full-scale`.
const FULL_SCALE_PARTICLES: usize = 1_000_000;

#[derive(Parser)]
#[command(name = "ncpf-bench", version, about = "Simulate, estimate, score and plot sparse quadratic tracking runs")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario; writes trajectory.csv, model.json, scenario.json.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one estimator on a simulated trajectory.
    Run {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Model file (default: model.json beside the trajectory).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        particles: Option<usize>,
        /// Use 10⁶ particles.
        #[arg(long, conflicts_with = "particles")]
        full_scale: bool,
        /// Particles per step to export for density plots.
        #[arg(long, default_value_t = 0)]
        snapshot_particles: usize,
    },
    /// Score estimate files against a trajectory.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        /// `label=path/to/estimates.csv`, repeatable.
        #[arg(long = "run", value_parser = parse_run, required = true)]
        runs: Vec<(String, PathBuf)>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plot state entries (1-based) as SVG.
    Plot {
        #[arg(long)]
        estimates: PathBuf,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        particles: Option<PathBuf>,
        #[arg(long = "index", required = true)]
        indices: Vec<usize>,
        #[arg(long, default_value = "")]
        label: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_run(s: &str) -> Result<(String, PathBuf), String> {
    let (label, path) = s.split_once('=').ok_or_else(|| format!("expected label=path, got {s:?}"))?;
    if label.is_empty() {
        return Err("empty run label".into());
    }
    Ok((label.to_string(), PathBuf::from(path)))
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Io { .. } | Error::Parse { .. } => 4,
        _ => 3,
    }
}

fn execute(cli: Cli) -> ncpf::Result<()> {
    match cli.command {
        Command::Simulate { scenario, out } => {
            for f in cmd_simulate(&Scenario::load(&scenario)?, &out)? {
                println!("{}", f.display());
            }
        }
        Command::Run {
            method,
            scenario,
            trajectory,
            out,
            model,
            particles,
            full_scale,
            snapshot_particles,
        } => {
            let opts = RunOptions {
                particles: if full_scale { Some(FULL_SCALE_PARTICLES) } else { particles },
                snapshot_particles,
                model,
            };
            let result = cmd_run(method, &Scenario::load(&scenario)?, &trajectory, &out, &opts)?;
            for f in &result.files {
                println!("{}", f.display());
            }
            eprintln!("{} finished in {:.3} s", method.name(), result.wall_time_s);
        }
        Command::Compare {
            scenario,
            trajectory,
            runs,
            out,
        } => {
            let result = cmd_compare(&Scenario::load(&scenario)?, &trajectory, &runs, &out)?;
            print!("{}", result.table);
        }
        Command::Plot {
            estimates,
            trajectory,
            particles,
            indices,
            label,
            out,
        } => {
            for f in cmd_plot(trajectory.as_deref(), &estimates, particles.as_deref(), &indices, &label, &out)? {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use ncpf::bench::io::*;
use ncpf::bench::metrics::*;
use ncpf::bench::plot::{render_svg, PlotInput};
use ncpf::bench::*;
use ncpf::model::{SupportMask, Trajectory, TrajectoryStep};

fn smoke_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/smoke.json")
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ncpf-bench"));
    c.env_remove(SEED_ENV);
    c
}

/// Truth: index 0 always active at 1.0, index 2 active from step 3 at 0.5.
fn toy_trajectory(steps: usize) -> Trajectory {
    let steps = (1..=steps)
        .map(|t| {
            let mut state = vec![1.0, 0.0, 0.0];
            if t >= 3 {
                state[2] = 0.5;
            }
            TrajectoryStep {
                t,
                support: SupportMask::from_bits(state.iter().map(|v| *v != 0.0).collect()),
                state,
                measurement: vec![t as f64, -0.25],
            }
        })
        .collect();
    Trajectory { steps }
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in walk(dir) {
        let name = entry.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
        if name.ends_with("_timing.json") || name.ends_with("timing.csv") {
            continue;
        }
        out.insert(name, std::fs::read(&entry).unwrap());
    }
    out
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            files.extend(walk(&p));
        } else {
            files.push(p);
        }
    }
    files
}

#[test]
fn trajectory_csv_round_trips_exactly() {
    let scenario = Scenario::load(&smoke_path()).unwrap();
    let traj = scenario.realize().unwrap().trajectory;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trajectory.csv");
    write_trajectory_csv(&path, &traj).unwrap();
    assert_eq!(read_trajectory_csv(&path).unwrap(), traj);
    let header = std::fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "t,kind,index,value");
}

#[test]
fn estimates_csv_round_trips_exactly() {
    let est = vec![vec![0.1, -1e-300, 0.0], vec![1.0 / 3.0, 0.0, 7e10]];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    write_estimates_csv(&path, &est).unwrap();
    assert_eq!(read_estimates_csv(&path).unwrap(), est);
}

#[test]
fn malformed_files_are_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "t,index,estimate\n1,1,abc\n").unwrap();
    assert!(matches!(read_estimates_csv(&path), Err(ncpf::Error::Parse { .. })));
    assert!(matches!(read_estimates_csv(&dir.path().join("missing.csv")), Err(ncpf::Error::Io { .. })));
}

#[test]
fn support_scores_by_hand() {
    let truth = SupportMask::from_indices(4, &[0, 2]).unwrap();
    let est = SupportMask::from_indices(4, &[0, 1, 3]).unwrap();
    let s = support_scores(&truth, &est);
    assert!((s.precision - 1.0 / 3.0).abs() < 1e-15);
    assert!((s.recall - 0.5).abs() < 1e-15);
    assert!((s.f1 - 0.4).abs() < 1e-15);
    let empty = SupportMask::empty(4);
    assert_eq!(support_scores(&empty, &empty).f1, 1.0);
    assert_eq!(support_scores(&truth, &empty).recall, 0.0);
}

#[test]
fn metrics_on_toy_data() {
    let traj = toy_trajectory(14);
    // A false positive on index 1 throughout; index 2 found one step late.
    let est: Vec<Vec<f64>> = (1..=14)
        .map(|t| vec![1.1, 0.2, if t >= 4 { 0.5 } else { 0.0 }])
        .collect();
    let r = compute_metrics("toy", &traj, &est, None).unwrap();
    // Steps 1 to 2: estimate {0,1} vs truth {0}. Step 3: {0,1} vs {0,2}.
    // Steps 4 onward: {0,1,2} vs {0,2}.
    assert!((r.precision[0] - 0.5).abs() < 1e-15);
    assert!((r.recall[2] - 0.5).abs() < 1e-15);
    assert!((r.precision[5] - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(r.recall[5], 1.0);
    // Squared errors: 0.01 + 0.04 every step, plus 0.25 at step 3.
    let total = ((14.0 * 0.05 + 0.25) / 42.0f64).sqrt();
    assert!((r.rmse_total - total).abs() < 1e-12);
    let active = ((14.0 * 0.01 + 0.25) / 26.0f64).sqrt();
    assert!((r.rmse_active - active).abs() < 1e-12);
    assert_eq!(
        r.events,
        vec![SupportEvent { t: 3, index: 2, kind: ChangeKind::Addition, detection: Detection::Latency(1) }]
    );
    assert_eq!(r.addition_hit_rate(1), Some(1.0));
    assert_eq!(r.addition_hit_rate(0), Some(0.0));
}

#[test]
fn late_and_unfinished_detections() {
    let truth: Vec<SupportMask> = (0..20)
        .map(|t| SupportMask::from_bits(vec![t >= 2, t >= 15]))
        .collect();
    let never = vec![SupportMask::empty(2); 20];
    let events = support_events(&truth, &never);
    assert_eq!(events[0].detection, Detection::Missed);
    assert_eq!(events[1].detection, Detection::Censored);
    assert_eq!((events[0].t, events[1].t), (3, 16));
}

#[test]
fn compare_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let traj = toy_trajectory(14);
    let tpath = dir.path().join("trajectory.csv");
    write_trajectory_csv(&tpath, &traj).unwrap();
    let epath = dir.path().join("toy_estimates.csv");
    write_estimates_csv(&epath, &traj.steps.iter().map(|s| s.state.clone()).collect::<Vec<_>>()).unwrap();
    let scenario = Scenario::load(&smoke_path()).unwrap();
    let out = cmd_compare(&scenario, &tpath, &[("exact".into(), epath)], dir.path()).unwrap();
    assert_eq!(out.reports[0].rmse_total, 0.0);
    assert_eq!(out.reports[0].mean_f1, 1.0);
    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().nth(1).unwrap(), "exact,0,0,1,1,1,1,1,0,0");
    let latency = std::fs::read_to_string(dir.path().join("latency.csv")).unwrap();
    assert_eq!(latency.lines().nth(1).unwrap(), "exact,3,3,addition,0");
}

#[test]
fn compare_rejects_shape_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let tpath = dir.path().join("trajectory.csv");
    write_trajectory_csv(&tpath, &toy_trajectory(5)).unwrap();
    let epath = dir.path().join("e.csv");
    write_estimates_csv(&epath, &vec![vec![0.0; 3]; 4]).unwrap();
    let scenario = Scenario::load(&smoke_path()).unwrap();
    assert!(cmd_compare(&scenario, &tpath, &[("x".into(), epath)], dir.path()).is_err());
}

#[test]
fn plots_are_deterministic_svg() {
    let traj = toy_trajectory(6);
    let est: Vec<Vec<f64>> = traj.steps.iter().map(|s| s.state.iter().map(|v| v * 0.9).collect()).collect();
    let input = PlotInput { trajectory: Some(&traj), estimates: &est, particles: None, label: "toy" };
    let a = render_svg(&input, 3).unwrap();
    assert_eq!(a, render_svg(&input, 3).unwrap());
    assert!(a.starts_with("<svg") || a.starts_with("<?xml"));
    assert!(a.contains("polyline"));
    assert!(render_svg(&input, 0).is_err());
    assert!(render_svg(&input, 4).is_err());
}

#[test]
fn single_step_scenario_runs() {
    let mut scenario = Scenario::load(&smoke_path()).unwrap();
    scenario.steps = 1;
    let dir = tempfile::tempdir().unwrap();
    cmd_simulate(&scenario, dir.path()).unwrap();
    let tpath = dir.path().join("trajectory.csv");
    for method in [Method::Ncpf, Method::Pf, Method::Nlcs] {
        let out = cmd_run(method, &scenario, &tpath, dir.path(), &RunOptions::default()).unwrap();
        assert_eq!(out.estimates.len(), 1);
    }
}

#[test]
fn scenario_validation() {
    let text = std::fs::read_to_string(smoke_path()).unwrap();
    assert!(Scenario::from_json(&text).is_ok());
    for bad in [
        text.replace("\"version\": 1", "\"version\": 9"),
        text.replace("\"steps\": 12", "\"steps\": 0"),
        text.replace("[2, 7]", "[0, 7]"),
        text.replace("\"name\"", "\"nmae\""),
    ] {
        assert!(matches!(Scenario::from_json(&bad), Err(ncpf::Error::Config(_))), "{bad}");
    }
    let desk = Scenario::desk(1);
    assert_eq!(Scenario::from_json(&desk.to_json()).unwrap(), desk);
}

#[test]
fn cli_is_byte_deterministic() {
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let d = dir.path();
            let scenario = smoke_path();
            let status = bin().args(["simulate", "--scenario"]).arg(&scenario).arg("--out").arg(d).status().unwrap();
            assert!(status.success());
            for m in ["ncpf", "pf", "nlcs"] {
                let status = bin()
                    .args(["run", "--method", m, "--snapshot-particles", "10", "--scenario"])
                    .arg(&scenario)
                    .arg("--trajectory")
                    .arg(d.join("trajectory.csv"))
                    .arg("--out")
                    .arg(d)
                    .status()
                    .unwrap();
                assert!(status.success());
            }
            let out = bin()
                .args(["compare", "--scenario"])
                .arg(&scenario)
                .arg("--trajectory")
                .arg(d.join("trajectory.csv"))
                .arg("--run")
                .arg(format!("ncpf={}", d.join("ncpf_estimates.csv").display()))
                .arg("--out")
                .arg(d)
                .output()
                .unwrap();
            assert!(out.status.success());
            assert!(String::from_utf8(out.stdout).unwrap().contains("rmse_active"));
            let status = bin()
                .args(["plot", "--index", "2", "--estimates"])
                .arg(d.join("ncpf_estimates.csv"))
                .arg("--particles")
                .arg(d.join("ncpf_particles.csv"))
                .arg("--out")
                .arg(d.join("plots"))
                .status()
                .unwrap();
            assert!(status.success());
            let contents = dir_contents(d);
            (dir, contents)
        })
        .collect();
    assert!(runs[0].1.len() >= 12);
    assert_eq!(runs[0].1, runs[1].1);
}

#[test]
fn seed_override_changes_the_trajectory() {
    let simulate = |seed: Option<&str>| {
        let dir = tempfile::tempdir().unwrap();
        let mut cmd = bin();
        if let Some(s) = seed {
            cmd.env(SEED_ENV, s);
        }
        assert!(cmd.args(["simulate", "--scenario"]).arg(smoke_path()).arg("--out").arg(dir.path()).status().unwrap().success());
        std::fs::read(dir.path().join("trajectory.csv")).unwrap()
    };
    let base = simulate(None);
    assert_eq!(base, simulate(Some("7")));
    assert_ne!(base, simulate(Some("8")));
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = bin()
        .args(["simulate", "--scenario"])
        .arg(dir.path().join("nope.json"))
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(missing.code(), Some(4));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, std::fs::read_to_string(smoke_path()).unwrap().replace("\"version\": 1", "\"version\": 2")).unwrap();
    let status = bin().args(["simulate", "--scenario"]).arg(&bad).arg("--out").arg(dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let status = bin().env(SEED_ENV, "abc").args(["simulate", "--scenario"]).arg(smoke_path()).arg("--out").arg(dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let usage = bin().arg("frobnicate").status().unwrap();
    assert!(!usage.success());
}

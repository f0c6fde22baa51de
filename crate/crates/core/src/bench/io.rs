//! CSV and JSON files exchanged between the commands. Times and indices are
//! 1-based in every file.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SupportMask, Trajectory, TrajectoryStep};
use crate::particle::ParticleCloud;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    State,
    Support,
    Measurement,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRow {
    t: usize,
    kind: RowKind,
    index: usize,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct EstimateRow {
    t: usize,
    index: usize,
    estimate: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ParticleRow {
    pub t: usize,
    pub particle_id: usize,
    pub index: usize,
    pub value: f64,
    pub weight: f64,
}

fn parse_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_error(path, format!("{other:?}")),
        }
    } else {
        parse_error(path, e)
    }
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Reader::from_reader(file))
}

fn finish<W: Write>(path: &Path, mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Header `t,kind,index,value`; per step the state, then the support as 0/1,
/// then the measurement.
pub fn write_trajectory_csv(path: &Path, trajectory: &Trajectory) -> Result<()> {
    let mut w = writer(path)?;
    for step in &trajectory.steps {
        let rows = step
            .state
            .iter()
            .enumerate()
            .map(|(i, v)| (RowKind::State, i, *v))
            .chain(
                step.support
                    .bits()
                    .iter()
                    .enumerate()
                    .map(|(i, b)| (RowKind::Support, i, if *b { 1.0 } else { 0.0 })),
            )
            .chain(step.measurement.iter().enumerate().map(|(i, v)| (RowKind::Measurement, i, *v)));
        for (kind, i, value) in rows {
            w.serialize(TrajectoryRow {
                t: step.t,
                kind,
                index: i + 1,
                value,
            })
            .map_err(|e| csv_error(path, e))?;
        }
    }
    finish(path, w)
}

pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let mut by_t: BTreeMap<usize, BTreeMap<(RowKind, usize), f64>> = BTreeMap::new();
    for row in reader(path)?.deserialize::<TrajectoryRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        if row.t == 0 || row.index == 0 {
            return Err(parse_error(path, "t and index are 1-based"));
        }
        by_t.entry(row.t).or_default().insert((row.kind, row.index - 1), row.value);
    }
    let mut steps = Vec::with_capacity(by_t.len());
    for (expected, (t, rows)) in (1..).zip(by_t) {
        if t != expected {
            return Err(parse_error(path, format!("missing time step {expected}")));
        }
        let collect = |kind: RowKind| -> Result<Vec<f64>> {
            let values: Vec<(usize, f64)> = rows
                .iter()
                .filter(|((k, _), _)| *k == kind)
                .map(|((_, i), v)| (*i, *v))
                .collect();
            if values.iter().enumerate().any(|(pos, (i, _))| pos != *i) {
                return Err(parse_error(path, format!("gap in {kind:?} indices at t={t}")));
            }
            Ok(values.into_iter().map(|(_, v)| v).collect())
        };
        let state = collect(RowKind::State)?;
        let support = collect(RowKind::Support)?;
        let measurement = collect(RowKind::Measurement)?;
        if support.len() != state.len() || support.iter().any(|v| *v != 0.0 && *v != 1.0) {
            return Err(parse_error(path, format!("bad support rows at t={t}")));
        }
        steps.push(TrajectoryStep {
            t,
            state,
            support: SupportMask::from_bits(support.iter().map(|v| *v == 1.0).collect()),
            measurement,
        });
    }
    if steps.is_empty() {
        return Err(parse_error(path, "no rows"));
    }
    let n = steps[0].state.len();
    let n_meas = steps[0].measurement.len();
    if steps.iter().any(|s| s.state.len() != n || s.measurement.len() != n_meas) {
        return Err(parse_error(path, "dimensions vary over time"));
    }
    Ok(Trajectory { steps })
}

/// Header `t,index,estimate`, one row per state entry.
pub fn write_estimates_csv(path: &Path, estimates: &[Vec<f64>]) -> Result<()> {
    let mut w = writer(path)?;
    for (k, est) in estimates.iter().enumerate() {
        for (i, v) in est.iter().enumerate() {
            w.serialize(EstimateRow {
                t: k + 1,
                index: i + 1,
                estimate: *v,
            })
            .map_err(|e| csv_error(path, e))?;
        }
    }
    finish(path, w)
}

pub fn read_estimates_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for row in reader(path)?.deserialize::<EstimateRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        if row.t == 0 || row.index == 0 {
            return Err(parse_error(path, "t and index are 1-based"));
        }
        if row.t > out.len() + 1 || row.t < out.len() {
            return Err(parse_error(path, format!("rows out of order at t={}", row.t)));
        }
        if row.t == out.len() + 1 {
            out.push(Vec::new());
        }
        let est = out.last_mut().expect("pushed above");
        if row.index != est.len() + 1 {
            return Err(parse_error(path, format!("index {} out of order at t={}", row.index, row.t)));
        }
        est.push(row.estimate);
    }
    if out.is_empty() || out.iter().any(|e| e.len() != out[0].len()) {
        return Err(parse_error(path, "empty or ragged estimates"));
    }
    Ok(out)
}

/// Appends up to `max_particles` particles of `cloud` (active entries only).
pub fn push_particle_rows(rows: &mut Vec<ParticleRow>, cloud: &ParticleCloud, max_particles: usize) {
    for p in 0..cloud.len().min(max_particles) {
        for (&idx, v) in cloud.active().iter().zip(cloud.particle(p)) {
            rows.push(ParticleRow {
                t: cloud.t(),
                particle_id: p + 1,
                index: idx + 1,
                value: *v,
                weight: cloud.weights()[p],
            });
        }
    }
}

/// Header `t,particle_id,index,value,weight`.
pub fn write_particles_csv(path: &Path, rows: &[ParticleRow]) -> Result<()> {
    let mut w = writer(path)?;
    if rows.is_empty() {
        w.write_record(["t", "particle_id", "index", "value", "weight"])
            .map_err(|e| csv_error(path, e))?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)
}

pub fn read_particles_csv(path: &Path) -> Result<Vec<ParticleRow>> {
    reader(path)?
        .deserialize::<ParticleRow>()
        .map(|r| r.map_err(|e| csv_error(path, e)))
        .collect()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

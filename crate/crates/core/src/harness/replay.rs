//! Trajectory CSV I/O and post-processing into plot-ready polylines.

use crate::sim::Medium;
use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const TRAJECTORY_HEADER: [&str; 10] = [
    "step", "t", "x", "y", "z", "yaw", "medium", "reward", "min_range", "d_goal",
];

/// One simulation step. `medium` is the medium the step's time was
/// accounted to (the one at the start of the step); the pose is post-step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryRow {
    pub step: u32,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    pub medium: Medium,
    pub reward: f64,
    pub min_range: f64,
    pub d_goal: f64,
}

pub fn write_trajectory(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(TRAJECTORY_HEADER)?;
    let f = |v: f64| format!("{v:.6}");
    for r in rows {
        w.write_record([
            r.step.to_string(),
            f(r.t),
            f(r.x),
            f(r.y),
            f(r.z),
            f(r.yaw),
            r.medium.as_str().to_string(),
            f(r.reward),
            f(r.min_range),
            f(r.d_goal),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a trajectory file; the first malformed row is reported with its
/// 1-based line number.
pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRow>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(TRAJECTORY_HEADER.iter().copied()) {
        return Err(anyhow!(
            "{}: line 1: expected header `{}`",
            path.display(),
            TRAJECTORY_HEADER.join(",")
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<TrajectoryRow>() {
        let row = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            anyhow!("{}: line {line}: malformed trajectory row: {e}", path.display())
        })?;
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MediumChange {
    pub step: u32,
    pub from: Medium,
    pub to: Medium,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplaySummary {
    pub rows: usize,
    pub t_air: f64,
    pub t_water: f64,
    pub medium_changes: Vec<MediumChange>,
}

pub fn summarize(rows: &[TrajectoryRow], dt: f64) -> ReplaySummary {
    let n_air = rows.iter().filter(|r| r.medium == Medium::Air).count();
    let n_water = rows.len() - n_air;
    let medium_changes = rows
        .windows(2)
        .filter(|w| w[0].medium != w[1].medium)
        .map(|w| MediumChange {
            step: w[1].step,
            from: w[0].medium,
            to: w[1].medium,
            x: w[1].x,
            y: w[1].y,
            z: w[1].z,
        })
        .collect();
    ReplaySummary {
        rows: rows.len(),
        t_air: n_air as f64 * dt,
        t_water: n_water as f64 * dt,
        medium_changes,
    }
}

/// Reads `input` and writes `xy.csv`, `xz.csv`, `medium_changes.csv` and
/// `summary.json` into `out`.
pub fn cmd_replay(input: &Path, out: &Path, dt: f64) -> Result<ReplaySummary> {
    let rows = read_trajectory(input)?;
    let summary = summarize(&rows, dt);
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;

    let f = |v: f64| format!("{v:.6}");
    let mut xy = csv::Writer::from_path(out.join("xy.csv"))?;
    let mut xz = csv::Writer::from_path(out.join("xz.csv"))?;
    xy.write_record(["step", "x", "y"])?;
    xz.write_record(["step", "x", "z"])?;
    for r in &rows {
        xy.write_record([r.step.to_string(), f(r.x), f(r.y)])?;
        xz.write_record([r.step.to_string(), f(r.x), f(r.z)])?;
    }
    xy.flush()?;
    xz.flush()?;

    let mut mc = csv::Writer::from_path(out.join("medium_changes.csv"))?;
    mc.write_record(["step", "from", "to", "x", "y", "z"])?;
    for c in &summary.medium_changes {
        mc.write_record([
            c.step.to_string(),
            c.from.as_str().to_string(),
            c.to.as_str().to_string(),
            f(c.x),
            f(c.y),
            f(c.z),
        ])?;
    }
    mc.flush()?;
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

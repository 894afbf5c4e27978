use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::integrators::{Scheme, Status, TauMode, Trajectory};

/// Parameter value a record was produced under in a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTag {
    pub axis: String,
    pub value: f64,
}

/// One line of a run log: a scheme on one instance at one ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n: usize,
    pub d: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_seed: Option<u64>,
    /// SHA-256 of the serialized instance file.
    pub instance_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsity: Option<f64>,
    pub nterms: usize,
    pub scheme: Scheme,
    pub epsilon: f64,
    pub c: f64,
    pub r: f64,
    pub m: f64,
    pub gamma: f64,
    pub tau_mode: TauMode,
    pub n_starts: usize,
    pub best_start: usize,
    pub status: Status,
    /// Iterations of the selected run; accepted steps for RK45.
    pub iterations: usize,
    pub avg_iterations: f64,
    pub rejected: usize,
    pub delta: f64,
    pub objective: f64,
    pub penalty: f64,
    pub residual: f64,
    pub tau_final: f64,
    pub tau_clamped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_time: Option<f64>,
    pub u: Vec<f64>,
    pub rounded: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_u: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errobj: Option<f64>,
    pub bound: f64,
    pub simplified_bound: f64,
    pub diverged_starts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepTag>,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

impl RunRecord {
    pub fn within_bound(&self) -> bool {
        self.delta <= self.bound
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Writes one JSON object per line, appending when `append` is set.
pub fn write_jsonl(records: &[RunRecord], path: &Path, append: bool) -> Result<(), HarnessError> {
    let mut f = OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)?;
    let mut buf = String::new();
    for r in records {
        buf.push_str(&r.to_json_line());
        buf.push('\n');
    }
    f.write_all(buf.as_bytes())?;
    Ok(())
}

/// Reads a run log, skipping blank lines.
pub fn read_jsonl(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let f = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Writes the retained trajectory as CSV (`.csv`) or JSON (anything else).
pub fn dump_trajectory(record: &RunRecord, path: &Path) -> Result<(), HarnessError> {
    let traj = record
        .trajectory
        .as_ref()
        .ok_or(HarnessError::NoTrajectory)?;
    let text = match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => traj.to_csv(),
        _ => traj.to_json(),
    };
    std::fs::write(path, text)?;
    Ok(())
}

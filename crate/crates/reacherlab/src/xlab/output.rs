//! File outputs: the per-batch results CSV, the JSON metadata sidecar
//! that makes a run replayable, and the probe signal/arrival logs.
//!
//! All numbers are printed with 9 significant digits and LF line
//! endings, so virtual-mode runs serialize byte-identically.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{RunResult, SignalProbeResult};
use crate::util::sig9;
use crate::xlab::config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("metadata error on {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.to_path_buf(), source }
}

/// Per-batch learning-curve rows:
/// `batch,steps,mean_return,std_return,mean_final_distance`.
pub fn write_run_csv(result: &RunResult, path: &Path) -> Result<(), OutputError> {
    let mut out = String::from("batch,steps,mean_return,std_return,mean_final_distance\n");
    for row in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.batch,
            row.steps,
            sig9(row.mean_return),
            sig9(row.std_return),
            sig9(row.mean_final_distance),
        ));
    }
    std::fs::write(path, out).map_err(io_err(path))
}

/// Sidecar carrying everything needed to re-execute a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub code_version: String,
}

impl RunMetadata {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            config: config.clone(),
            seed: config.seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

pub fn write_metadata(meta: &RunMetadata, path: &Path) -> Result<(), OutputError> {
    let text = serde_json::to_string_pretty(meta)
        .map_err(|source| OutputError::Json { path: path.to_path_buf(), source })?;
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))?;
    f.write_all(b"\n").map_err(io_err(path))
}

pub fn read_metadata(path: &Path) -> Result<RunMetadata, OutputError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| OutputError::Json { path: path.to_path_buf(), source })
}

/// Probe signal log: one row per agent step with the time-aligned motor
/// signals, `step,action<j>...,qdd<j>...,torque<j>...,current<j>...`.
pub fn write_signal_csv(probe: &SignalProbeResult, path: &Path) -> Result<(), OutputError> {
    let n = probe.n_act;
    let mut header = String::from("step");
    for name in ["action", "qdd", "torque", "current"] {
        for j in 0..n {
            header.push_str(&format!(",{name}{j}"));
        }
    }
    header.push('\n');
    let mut out = header;

    let mut aligned: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for sig in ["qdd", "torque", "current"] {
        for j in 0..n {
            aligned.push(probe.aligned(sig, j));
        }
    }
    let rows = aligned.iter().map(|(x, _)| x.len()).min().unwrap_or(0);
    for k in 0..rows {
        out.push_str(&k.to_string());
        for j in 0..n {
            out.push(',');
            out.push_str(&sig9(probe.actions[k][j]));
        }
        for col in &aligned {
            out.push(',');
            out.push_str(&sig9(col.1[k]));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(io_err(path))
}

/// Columns of a signal CSV, keyed by header name.
pub fn read_signal_csv(path: &Path) -> Result<Vec<(String, Vec<f64>)>, OutputError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines();
    let header: Vec<String> =
        lines.next().unwrap_or("").split(',').map(|s| s.to_string()).collect();
    let mut cols: Vec<(String, Vec<f64>)> =
        header.into_iter().map(|h| (h, Vec::new())).collect();
    for line in lines {
        for (slot, field) in cols.iter_mut().zip(line.split(',')) {
            slot.1.push(field.parse().unwrap_or(f64::NAN));
        }
    }
    Ok(cols)
}

/// Arrival-timestamp log, one nanosecond timestamp per line under an
/// `arrival_ns` header.
pub fn write_arrivals_csv(arrivals: &[crate::timebase::Instant], path: &Path) -> Result<(), OutputError> {
    let mut out = String::from("arrival_ns\n");
    for a in arrivals {
        out.push_str(&a.as_nanos().to_string());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(io_err(path))
}

pub fn read_arrivals_csv(path: &Path) -> Result<Vec<crate::timebase::Instant>, OutputError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text
        .lines()
        .skip(1)
        .filter_map(|l| l.trim().parse::<u64>().ok())
        .map(crate::timebase::Instant::from_nanos)
        .collect())
}

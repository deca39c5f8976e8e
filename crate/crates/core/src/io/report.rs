use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_schema, read_text, write_text};
use crate::error::Result;

/// One iteration of the shaper: iteration index `k` (from 1), the bound at
/// `z_k`, and the stop statistic `‖g⊥‖ / ‖g‖` at `z_k`.
///
/// Serialized as a `[k, objective, grad_ratio]` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, f64, f64)", into = "(usize, f64, f64)")]
pub struct TraceEntry {
    pub k: usize,
    pub objective: f64,
    pub grad_ratio: f64,
}

impl From<(usize, f64, f64)> for TraceEntry {
    fn from((k, objective, grad_ratio): (usize, f64, f64)) -> Self {
        Self {
            k,
            objective,
            grad_ratio,
        }
    }
}

impl From<TraceEntry> for (usize, f64, f64) {
    fn from(e: TraceEntry) -> Self {
        (e.k, e.objective, e.grad_ratio)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// `‖g⊥‖ / ‖g‖ ≤ ε`.
    Converged,
    IterationCap,
    /// The line search found no angle that lowers the bound, so the iterate
    /// is a fixed point of the update.
    Stalled,
}

/// The outcome of one shaping run from one initial point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapingReport {
    pub restart_index: usize,
    pub seed: u64,
    pub stop_reason: StopReason,
    pub final_objective: f64,
    pub trace: Vec<TraceEntry>,
}

impl ShapingReport {
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |e| e.k)
    }
}

/// `report.json`: every restart's trace plus the selection outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema: u32,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub gamma: f64,
    pub snr_db: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub best_restart: usize,
    pub final_objective: f64,
    pub restarts: Vec<ShapingReport>,
}

pub fn load_report(path: impl AsRef<Path>) -> Result<ReportFile> {
    let report: ReportFile = serde_json::from_str(&read_text(path.as_ref())?)?;
    check_schema(report.schema)?;
    Ok(report)
}

pub fn save_report(report: &ReportFile, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string(report)?;
    text.push('\n');
    write_text(path.as_ref(), &text)
}

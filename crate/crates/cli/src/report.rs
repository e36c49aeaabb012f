//! Per-scenario metrics, declared checks and the run summary.

use std::collections::BTreeMap;

use ond_core::sim::SimTrace;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable tolerance, e.g. `<= 1e-9`.
    pub tolerance: String,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance: format!("<= {limit:e}"),
            pass: value <= limit,
        }
    }

    pub fn below(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance: format!("< {limit:e}"),
            pass: value < limit,
        }
    }

    /// `|value - target| <= rel * |target|`.
    pub fn within(name: &str, value: f64, target: f64, rel: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance: format!("{target} +/- {}%", rel * 100.0),
            pass: (value - target).abs() <= rel * target.abs(),
        }
    }

    /// A yes/no property; `value` is 1 or 0.
    pub fn holds(name: &str, ok: bool) -> Self {
        Check {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            tolerance: "true".into(),
            pass: ok,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub seed: u64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Artifacts, relative to the run's output directory.
    pub files: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
}

impl ScenarioReport {
    pub fn new(name: &str, seed: u64) -> Self {
        ScenarioReport {
            name: name.into(),
            seed,
            status: Status::Ok,
            error: None,
            files: Vec::new(),
            metrics: BTreeMap::new(),
            checks: Vec::new(),
        }
    }

    pub fn finish(&mut self, outcome: anyhow::Result<()>) {
        match outcome {
            Err(e) => {
                self.status = Status::Error;
                self.error = Some(format!("{}: {e:#}", self.name));
            }
            Ok(()) if self.checks.iter().any(|c| !c.pass) => self.status = Status::Failed,
            Ok(()) => self.status = Status::Ok,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SummaryReport {
    pub version: String,
    pub scenario: Vec<ScenarioReport>,
}

impl SummaryReport {
    pub fn all_ok(&self) -> bool {
        self.scenario.iter().all(|s| s.status == Status::Ok)
    }
}

/// Tracking metrics of a trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceMetrics {
    pub terminal_abs_e1: f64,
    pub rms_e1: f64,
    pub max_abs_e1: f64,
}

/// Metrics over samples with `t >= from`.
pub fn trace_metrics(tr: &SimTrace, from: f64) -> TraceMetrics {
    let start =
        tr.t.iter()
            .position(|&t| t >= from)
            .unwrap_or(tr.len().saturating_sub(1));
    let e = &tr.e1[start..];
    TraceMetrics {
        terminal_abs_e1: tr.e1.last().map_or(f64::NAN, |v| v.abs()),
        rms_e1: (e.iter().map(|v| v * v).sum::<f64>() / e.len() as f64).sqrt(),
        max_abs_e1: e.iter().fold(0.0, |m, v| m.max(v.abs())),
    }
}

/// Step-response metrics for a step from `from_level` to `to_level` at
/// `at`, evaluated up to `until`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepMetrics {
    /// Peak excursion past the target, relative to the step size.
    pub overshoot: f64,
    /// Time after the step until `x1` stays within `band` (relative to the
    /// step size) of the target; NaN if it never does.
    pub settling_time: f64,
}

pub fn step_metrics(tr: &SimTrace, from_level: f64, to_level: f64, at: f64, until: f64, band: f64) -> StepMetrics {
    let size = to_level - from_level;
    let idx: Vec<usize> = (0..tr.len()).filter(|&i| tr.t[i] >= at && tr.t[i] <= until).collect();
    let overshoot = idx
        .iter()
        .map(|&i| (tr.x1_true[i] - to_level) / size)
        .fold(0.0, f64::max);
    let outside = idx
        .iter()
        .rposition(|&i| ((tr.x1_true[i] - to_level) / size).abs() > band);
    let settling_time = match outside {
        None => 0.0,
        Some(j) if j + 1 < idx.len() => tr.t[idx[j + 1]] - at,
        Some(_) => f64::NAN,
    };
    StepMetrics {
        overshoot,
        settling_time,
    }
}

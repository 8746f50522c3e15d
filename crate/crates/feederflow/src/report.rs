//! Line-oriented reports and machine-readable output documents.
//!
//! Text reports are sequences of records, one per line, each a space-joined
//! list of `key=value` pairs. Values never contain spaces, so the lines split
//! unambiguously. Floats are rendered with a fixed 12-digit scientific form,
//! which makes repeated runs byte-comparable.

use serde::Serialize;

/// Canonical float rendering for report lines: fixed width, no locale, and
/// `-0.0` folded into `0.0` so sign noise never leaks into diffs.
pub fn float_field(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.12e}")
}

/// One `key=value` report line.
#[derive(Debug, Default, Clone)]
pub struct Record {
    pairs: Vec<(String, String)>,
}

impl Record {
    pub fn new(kind: &str) -> Self {
        let mut record = Record::default();
        record.pairs.push(("record".into(), kind.into()));
        record
    }

    pub fn field(mut self, key: &str, value: impl Into<String>) -> Self {
        self.pairs.push((key.into(), value.into()));
        self
    }

    pub fn float(self, key: &str, value: f64) -> Self {
        let rendered = float_field(value);
        self.field(key, rendered)
    }

    pub fn integer(self, key: &str, value: u64) -> Self {
        self.field(key, value.to_string())
    }

    pub fn boolean(self, key: &str, value: bool) -> Self {
        self.field(key, if value { "true" } else { "false" })
    }

    pub fn render(&self) -> String {
        self.pairs
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Accumulates report lines.
#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<String>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, record: Record) {
        self.lines.push(record.render());
    }

    pub fn line(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }
}

/// Per-bus row of a solved operating point.
#[derive(Debug, Clone, Serialize)]
pub struct BusSolution {
    pub id: u32,
    /// Voltage magnitude (pu).
    pub v_mag: f64,
    /// Voltage angle drop in radians (positive = lagging the slack).
    pub v_angle_rad: f64,
    /// Reactive setpoint assigned by the active policy (absent on the slack).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_gen: Option<f64>,
    /// Magnitude of the current on the branch feeding this bus (absent on
    /// the slack, which has no upstream branch).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch_current_mag: Option<f64>,
}

/// Machine-readable result of `solve`.
#[derive(Debug, Clone, Serialize)]
pub struct SolveDocument {
    pub feeder: String,
    pub policy: String,
    pub tolerance: f64,
    pub iterations: usize,
    pub residual: f64,
    pub total_loss: f64,
    pub slack_p: f64,
    pub slack_q: f64,
    pub buses: Vec<BusSolution>,
}

/// Machine-readable result of `compare`.
#[derive(Debug, Clone, Serialize)]
pub struct CompareDocument {
    pub feeder: String,
    pub tolerance: f64,
    pub no_action_loss: f64,
    pub heuristic_loss: f64,
    /// Loss reduction of the heuristic relative to no action, in percent.
    pub reduction_percent: f64,
    /// True when the heuristic lost to no action — worth flagging loudly.
    pub ordering_violated: bool,
    pub buses: Vec<CompareBus>,
}

/// Per-bus setpoints under the two compared policies.
#[derive(Debug, Clone, Serialize)]
pub struct CompareBus {
    pub id: u32,
    pub q_gen_no_action: f64,
    pub q_gen_heuristic: f64,
}

/// One certified ordering trial.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyRecord {
    pub case: String,
    pub mode: String,
    pub trial: u32,
    pub seed: u64,
    pub loss_left: f64,
    pub loss_right: f64,
    pub margin: f64,
    pub holds: bool,
    pub iterations_left: u64,
    pub iterations_right: u64,
}

/// Per-(case, mode) tally.
#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub case: String,
    pub mode: String,
    pub trials: u32,
    pub passed: u32,
    pub failed: u32,
}

/// Machine-readable result of `verify`.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyDocument {
    pub seed: u64,
    pub trials: u32,
    pub records: Vec<VerifyRecord>,
    pub summaries: Vec<VerifySummary>,
    pub total_passed: u32,
    pub total_failed: u32,
}

/// Machine-readable result of `sweep`.
#[derive(Debug, Clone, Serialize)]
pub struct SweepDocument {
    pub feeder: String,
    pub grid: usize,
    pub controllable_buses: usize,
    pub evaluated: u64,
    pub skipped: u64,
    pub best_loss: f64,
    pub best_setpoints: Vec<SweepSetpoint>,
    pub heuristic_loss: f64,
    pub no_action_loss: f64,
    /// `heuristic_loss - best_loss`; small and nonnegative when the heuristic
    /// is near-optimal on this feeder.
    pub heuristic_gap: f64,
}

/// One bus of the best grid point found by `sweep`.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSetpoint {
    pub id: u32,
    pub q_gen: f64,
}

//! On-disk feeder format: a TOML document with informational bases, the slack
//! voltage reference in polar form, and one record per bus.
//!
//! ```toml
//! base_mva = 10.0
//! base_kv = 12.66
//!
//! [slack_voltage]
//! magnitude = 1.0
//! angle_rad = 0.0
//!
//! [[buses]]
//! id = 0            # the slack: omits `parent`, carries nothing else
//!
//! [[buses]]
//! id = 1
//! parent = 0
//! r = 0.01          # branch from `parent` to this bus (pu)
//! x = 0.01
//! p_load = 0.1
//! q_load = 0.05
//! p_gen = 0.0
//! q_max = 0.0
//! ```
//!
//! The emitter writes floats in shortest round-trip form and preserves the
//! polar slack pair verbatim, so an emitted document re-parses to an
//! identical feeder.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;
use thiserror::Error;

use crate::feeder::{Bus, FeederError, RadialFeeder};

/// A parsed feeder plus the document-level fields that do not live on the
/// [`RadialFeeder`] itself.
#[derive(Debug, Clone, PartialEq)]
pub struct FeederDocument {
    /// Power base (MVA); informational only.
    pub base_mva: f64,
    /// Voltage base (kV); informational only.
    pub base_kv: f64,
    /// Slack voltage magnitude (pu), kept in the file's polar form.
    pub slack_magnitude: f64,
    /// Slack voltage angle (radians), kept in the file's polar form.
    pub slack_angle_rad: f64,
    pub feeder: RadialFeeder,
}

impl FeederDocument {
    /// Wraps an in-memory feeder for writing.
    pub fn new(feeder: RadialFeeder, base_mva: f64, base_kv: f64) -> Self {
        let v = feeder.slack_voltage();
        FeederDocument {
            base_mva,
            base_kv,
            slack_magnitude: v.norm(),
            slack_angle_rad: v.arg(),
            feeder,
        }
    }
}

/// Feeder-file rejection reasons.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    /// TOML-level syntax or type problem; the message carries line/column.
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("bus record {index}{}: {detail}", .id.map(|i| format!(" (id {i})")).unwrap_or_default())]
    Record {
        /// Zero-based position of the record in the `buses` array.
        index: usize,
        id: Option<u32>,
        detail: String,
    },
    #[error("document: {0}")]
    Document(String),
    #[error(transparent)]
    Feeder(#[from] FeederError),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    base_mva: f64,
    base_kv: f64,
    slack_voltage: RawSlackVoltage,
    #[serde(default)]
    buses: Vec<RawBus>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlackVoltage {
    magnitude: f64,
    angle_rad: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBus {
    id: Option<u32>,
    parent: Option<u32>,
    r: Option<f64>,
    x: Option<f64>,
    p_load: Option<f64>,
    q_load: Option<f64>,
    p_gen: Option<f64>,
    q_max: Option<f64>,
}

/// Parses a feeder document from TOML text.
pub fn parse_feeder_str(text: &str) -> Result<FeederDocument, ParseError> {
    let raw: RawDocument = toml::from_str(text)?;

    if !raw.base_mva.is_finite() || !raw.base_kv.is_finite() {
        return Err(ParseError::Document(
            "base_mva and base_kv must be finite".into(),
        ));
    }
    let sv = &raw.slack_voltage;
    if !sv.magnitude.is_finite() || sv.magnitude <= 0.0 || !sv.angle_rad.is_finite() {
        return Err(ParseError::Document(
            "slack_voltage.magnitude must be positive and finite".into(),
        ));
    }
    if raw.buses.is_empty() {
        return Err(ParseError::Document("no bus records".into()));
    }

    let mut buses = Vec::with_capacity(raw.buses.len());
    for (index, rec) in raw.buses.iter().enumerate() {
        let record_err = |detail: String| ParseError::Record {
            index,
            id: rec.id,
            detail,
        };
        let id = rec
            .id
            .ok_or_else(|| record_err("missing field `id`".into()))?;

        let bus = if rec.parent.is_some() {
            let field = |value: Option<f64>, name: &str| -> Result<f64, ParseError> {
                let v = value.ok_or_else(|| record_err(format!("missing field `{name}`")))?;
                if !v.is_finite() {
                    return Err(record_err(format!("field `{name}` is not finite")));
                }
                Ok(v)
            };
            Bus {
                id,
                parent: rec.parent,
                branch_r: field(rec.r, "r")?,
                branch_x: field(rec.x, "x")?,
                p_load: field(rec.p_load, "p_load")?,
                q_load: field(rec.q_load, "q_load")?,
                p_gen: field(rec.p_gen, "p_gen")?,
                q_max: field(rec.q_max, "q_max")?,
            }
        } else {
            // Slack candidate: any stated field must be zero.
            for (value, name) in [
                (rec.r, "r"),
                (rec.x, "x"),
                (rec.p_load, "p_load"),
                (rec.q_load, "q_load"),
                (rec.p_gen, "p_gen"),
                (rec.q_max, "q_max"),
            ] {
                if let Some(v) = value {
                    if v != 0.0 {
                        return Err(record_err(format!(
                            "slack bus must not carry `{name}` (omit `parent` only on the slack)"
                        )));
                    }
                }
            }
            Bus::slack(id)
        };
        buses.push(bus);
    }

    let slack_voltage = Complex64::from_polar(sv.magnitude, sv.angle_rad);
    let feeder = RadialFeeder::new(buses, slack_voltage)?;
    Ok(FeederDocument {
        base_mva: raw.base_mva,
        base_kv: raw.base_kv,
        slack_magnitude: sv.magnitude,
        slack_angle_rad: sv.angle_rad,
        feeder,
    })
}

/// Reads and parses a feeder file.
pub fn read_feeder(path: &Path) -> Result<FeederDocument, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_feeder_str(&text)
}

/// Shortest round-trip float form with a guaranteed decimal point or exponent,
/// so TOML reads it back as a float.
fn toml_float(x: f64) -> String {
    format!("{x:?}")
}

/// Renders a feeder document in the on-disk format. The output re-parses to
/// an identical feeder.
pub fn write_feeder_str(doc: &FeederDocument) -> String {
    let mut out = String::new();
    out.push_str("# Radial feeder description.\n");
    out.push_str("# Electrical quantities are per-unit on the stated bases\n");
    out.push_str("# (base_mva, base_kv are informational). `r`/`x` describe the\n");
    out.push_str("# branch from `parent` to the bus. Exactly one bus omits\n");
    out.push_str("# `parent`: the slack, which carries no other fields.\n\n");
    let _ = writeln!(out, "base_mva = {}", toml_float(doc.base_mva));
    let _ = writeln!(out, "base_kv = {}", toml_float(doc.base_kv));
    out.push_str("\n[slack_voltage]\n");
    let _ = writeln!(out, "magnitude = {}", toml_float(doc.slack_magnitude));
    let _ = writeln!(out, "angle_rad = {}", toml_float(doc.slack_angle_rad));

    for bus in doc.feeder.buses() {
        out.push_str("\n[[buses]]\n");
        let _ = writeln!(out, "id = {}", bus.id);
        if let Some(parent) = bus.parent {
            let _ = writeln!(out, "parent = {parent}");
            let _ = writeln!(out, "r = {}", toml_float(bus.branch_r));
            let _ = writeln!(out, "x = {}", toml_float(bus.branch_x));
            let _ = writeln!(out, "p_load = {}", toml_float(bus.p_load));
            let _ = writeln!(out, "q_load = {}", toml_float(bus.q_load));
            let _ = writeln!(out, "p_gen = {}", toml_float(bus.p_gen));
            let _ = writeln!(out, "q_max = {}", toml_float(bus.q_max));
        }
    }
    out
}

/// Writes a feeder document to `path`.
pub fn write_feeder(path: &Path, doc: &FeederDocument) -> Result<(), ParseError> {
    std::fs::write(path, write_feeder_str(doc)).map_err(|e| ParseError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

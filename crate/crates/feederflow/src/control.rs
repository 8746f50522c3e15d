//! Decentralized reactive-generation policies.
//!
//! Every policy assigns one setpoint per controllable bus using only that
//! bus's own data (no coordination): the load-tracking heuristic saturates at
//! the smaller of demand and capability, `q_gen = min(q_load, q_max)`, so
//! recipients run at `q_max` and senders compensate exactly their own demand.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::feeder::{RadialFeeder, SetpointError, SetpointProfile};

/// How setpoints are chosen for a feeder.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Hold every controllable bus at its standing baseline (empty map: all zero).
    NoAction { baseline: BTreeMap<u32, f64> },
    /// Local load tracking: `q_gen = min(q_load, q_max)` at every controllable bus.
    Heuristic,
    /// A caller-supplied profile, revalidated against the feeder it is applied to.
    Fixed(SetpointProfile),
}

/// Policy application failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error(transparent)]
    Setpoint(#[from] SetpointError),
}

/// Baseline profile: every controllable bus at its standing setpoint.
///
/// Baselines default to zero; an explicit entry must stay within
/// `[0, min(q_load, q_max)]` (a standing setpoint never over-compensates
/// the bus's own demand).
pub fn apply_no_action(
    feeder: &RadialFeeder,
    baseline: &BTreeMap<u32, f64>,
) -> Result<SetpointProfile, ControlError> {
    let mut entries = BTreeMap::new();
    for id in feeder.controllable_buses() {
        let bus = feeder.bus(id);
        let q0 = baseline.get(&id).copied().unwrap_or(0.0);
        let cap = bus.q_max.min(bus.q_load);
        if !q0.is_finite() || q0 < 0.0 || q0 > cap {
            return Err(ControlError::Setpoint(SetpointError::OutOfRange {
                bus: id,
                value: q0,
                limit: cap,
            }));
        }
        entries.insert(id, q0);
    }
    for &id in baseline.keys() {
        if !entries.contains_key(&id) {
            return Err(ControlError::Setpoint(SetpointError::FeederMismatch {
                bus: id,
                detail: "baseline names a bus that is not controllable",
            }));
        }
    }
    Ok(SetpointProfile::new(feeder, entries).expect("baseline entries validated above"))
}

/// Load-tracking heuristic: `q_gen = min(q_load, q_max)` at every controllable bus.
pub fn apply_heuristic(feeder: &RadialFeeder) -> SetpointProfile {
    let entries = feeder
        .controllable_buses()
        .into_iter()
        .map(|id| {
            let bus = feeder.bus(id);
            (id, bus.q_load.min(bus.q_max))
        })
        .collect();
    SetpointProfile::new(feeder, entries).expect("heuristic setpoints lie in [0, q_max]")
}

/// Resolves a [`Policy`] to a concrete validated profile for `feeder`.
pub fn apply_policy(feeder: &RadialFeeder, policy: &Policy) -> Result<SetpointProfile, ControlError> {
    match policy {
        Policy::NoAction { baseline } => apply_no_action(feeder, baseline),
        Policy::Heuristic => Ok(apply_heuristic(feeder)),
        Policy::Fixed(profile) => {
            let entries = profile.entries().collect();
            Ok(SetpointProfile::new(feeder, entries)?)
        }
    }
}

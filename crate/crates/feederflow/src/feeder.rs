//! Radial feeder model: buses, validated tree topology, node classification,
//! and reactive-generation setpoint profiles.
//!
//! Conventions (per-unit throughout):
//! - exactly one slack bus (`parent == None`) that holds the feeder's voltage
//!   reference; it carries no load, no generation, and no branch impedance,
//! - every other bus owns the branch that connects it to its parent
//!   (`branch_r`, `branch_x` are the impedance of that upstream branch),
//! - bus ids are dense (`0..n_buses`), so vectors indexed by id are used
//!   everywhere downstream.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

/// One bus plus the branch that ties it to its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: u32,
    /// Parent bus id; `None` marks the slack bus.
    pub parent: Option<u32>,
    /// Resistance of the branch from `parent` to this bus (pu).
    pub branch_r: f64,
    /// Reactance of the branch from `parent` to this bus (pu).
    pub branch_x: f64,
    /// Active power demand at this bus (pu).
    pub p_load: f64,
    /// Reactive power demand at this bus (pu).
    pub q_load: f64,
    /// Fixed active generation at this bus (pu).
    pub p_gen: f64,
    /// Upper bound of the controllable reactive generation at this bus (pu).
    pub q_max: f64,
}

impl Bus {
    /// A slack bus carries only its id: no parent, no branch, no load, no generation.
    pub fn slack(id: u32) -> Self {
        Bus {
            id,
            parent: None,
            branch_r: 0.0,
            branch_x: 0.0,
            p_load: 0.0,
            q_load: 0.0,
            p_gen: 0.0,
            q_max: 0.0,
        }
    }
}

/// Role of a bus under the var-compensation policy, decided by how its
/// controllable capability compares to its own reactive demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    /// `0 < q_max < q_load`: cannot cover its own reactive demand.
    Recipient,
    /// `q_max >= q_load` and `q_max > 0`: can cover (at least) its own demand.
    Sender,
    /// `q_max == 0`: no controllable reactive generation.
    Passive,
}

/// Structural rejection reasons for a candidate feeder.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeederError {
    #[error("bus id {0} appears more than once")]
    DuplicateId(u32),
    #[error("bus id {id} is out of range for a feeder of {n_buses} buses (ids must be dense)")]
    InvalidId { id: u32, n_buses: usize },
    #[error("bus {0} is a second slack bus (exactly one bus may omit `parent`)")]
    MultipleSlack(u32),
    #[error("no slack bus (exactly one bus must omit `parent`)")]
    NoSlack,
    #[error("bus {0} lies on a parent cycle")]
    CycleDetected(u32),
    #[error("bus {0} references a parent that is not in the feeder")]
    DisconnectedBus(u32),
    #[error("bus {0} has a negative branch impedance component")]
    NegativeImpedance(u32),
    #[error("bus {0} has negative reactive capability (q_max < 0)")]
    NegativeCapability(u32),
    #[error("bus {0} carries a non-finite field")]
    NonFinite(u32),
    #[error("slack bus {0} must not carry load, generation, or branch impedance")]
    SlackNotBare(u32),
}

/// A validated radial feeder: a tree of buses rooted at the slack, with a
/// precomputed parents-before-children traversal order.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFeeder {
    buses: Vec<Bus>,
    slack: u32,
    slack_voltage: Complex64,
    /// Traversal order with every parent before its children; `topo[0]` is the slack.
    topo: Vec<u32>,
    /// Children adjacency, indexed by bus id.
    children: Vec<Vec<u32>>,
}

impl RadialFeeder {
    /// Validates a candidate bus set and builds the feeder.
    ///
    /// Checks, in order: finite fields, dense unique ids, exactly one slack,
    /// a bare slack record, non-negative impedances and capabilities, and a
    /// connected cycle-free parent structure.
    pub fn new(buses: Vec<Bus>, slack_voltage: Complex64) -> Result<Self, FeederError> {
        let n = buses.len();

        let mut by_id: Vec<Option<Bus>> = vec![None; n];
        for bus in buses {
            let id = bus.id;
            if (id as usize) >= n {
                return Err(FeederError::InvalidId { id, n_buses: n });
            }
            if by_id[id as usize].is_some() {
                return Err(FeederError::DuplicateId(id));
            }
            by_id[id as usize] = Some(bus);
        }
        // Dense + unique + in-range means every slot is filled.
        let buses: Vec<Bus> = by_id.into_iter().map(|b| b.expect("dense ids")).collect();

        if !slack_voltage.re.is_finite() || !slack_voltage.im.is_finite() {
            return Err(FeederError::NonFinite(u32::MAX));
        }

        let mut slack: Option<u32> = None;
        for bus in &buses {
            for field in [
                bus.branch_r,
                bus.branch_x,
                bus.p_load,
                bus.q_load,
                bus.p_gen,
                bus.q_max,
            ] {
                if !field.is_finite() {
                    return Err(FeederError::NonFinite(bus.id));
                }
            }
            match bus.parent {
                None => match slack {
                    None => slack = Some(bus.id),
                    Some(_) => return Err(FeederError::MultipleSlack(bus.id)),
                },
                Some(p) => {
                    if (p as usize) >= n {
                        return Err(FeederError::DisconnectedBus(bus.id));
                    }
                    if bus.branch_r < 0.0 || bus.branch_x < 0.0 {
                        return Err(FeederError::NegativeImpedance(bus.id));
                    }
                }
            }
            if bus.q_max < 0.0 {
                return Err(FeederError::NegativeCapability(bus.id));
            }
        }
        let slack = slack.ok_or(FeederError::NoSlack)?;

        let sb = &buses[slack as usize];
        if sb.branch_r != 0.0
            || sb.branch_x != 0.0
            || sb.p_load != 0.0
            || sb.q_load != 0.0
            || sb.p_gen != 0.0
            || sb.q_max != 0.0
        {
            return Err(FeederError::SlackNotBare(slack));
        }

        let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
        for bus in &buses {
            if let Some(p) = bus.parent {
                // A bus naming itself as parent is the smallest possible cycle.
                if p == bus.id {
                    return Err(FeederError::CycleDetected(bus.id));
                }
                children[p as usize].push(bus.id);
            }
        }
        for list in &mut children {
            list.sort_unstable();
        }

        // Breadth-first from the slack yields the parents-before-children order;
        // anything left unvisited sits on a parent cycle detached from the root.
        let mut topo = Vec::with_capacity(n);
        let mut visited = vec![false; n];
        let mut queue = std::collections::VecDeque::from([slack]);
        visited[slack as usize] = true;
        while let Some(id) = queue.pop_front() {
            topo.push(id);
            for &c in &children[id as usize] {
                visited[c as usize] = true;
                queue.push_back(c);
            }
        }
        if topo.len() != n {
            let stranded = (0..n as u32).find(|&i| !visited[i as usize]).expect("missing bus");
            return Err(FeederError::CycleDetected(stranded));
        }

        Ok(RadialFeeder {
            buses,
            slack,
            slack_voltage,
            topo,
            children,
        })
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn slack_id(&self) -> u32 {
        self.slack
    }

    pub fn slack_voltage(&self) -> Complex64 {
        self.slack_voltage
    }

    pub fn bus(&self, id: u32) -> &Bus {
        &self.buses[id as usize]
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    /// Traversal order with every parent before its children (slack first).
    pub fn topo_order(&self) -> &[u32] {
        &self.topo
    }

    pub fn children(&self, id: u32) -> &[u32] {
        &self.children[id as usize]
    }

    /// Branch impedance from `parent(id)` to `id`; zero for the slack.
    pub fn branch_impedance(&self, id: u32) -> Complex64 {
        let b = self.bus(id);
        Complex64::new(b.branch_r, b.branch_x)
    }

    /// Ids of buses with controllable reactive generation (`q_max > 0`), ascending.
    pub fn controllable_buses(&self) -> Vec<u32> {
        self.buses
            .iter()
            .filter(|b| b.parent.is_some() && b.q_max > 0.0)
            .map(|b| b.id)
            .collect()
    }
}

/// Classifies a bus by comparing its reactive capability to its own demand.
///
/// The boundary `q_max == q_load` counts as [`NodeClass::Sender`]: such a bus
/// can fully cover its own demand.
pub fn classify_node(bus: &Bus) -> NodeClass {
    if bus.q_max == 0.0 {
        NodeClass::Passive
    } else if bus.q_max >= bus.q_load {
        NodeClass::Sender
    } else {
        NodeClass::Recipient
    }
}

/// Rejection reasons for a reactive-setpoint assignment.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SetpointError {
    #[error("bus {bus}: setpoint {value} outside [0, {limit}]")]
    OutOfRange { bus: u32, value: f64, limit: f64 },
    #[error("profile does not match the feeder's controllable buses (bus {bus}: {detail})")]
    FeederMismatch { bus: u32, detail: &'static str },
}

/// Reactive-generation setpoints, one entry per controllable bus.
///
/// The map is kept sorted by bus id so iteration order (and therefore every
/// report built from a profile) is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct SetpointProfile {
    q_gen: BTreeMap<u32, f64>,
}

impl SetpointProfile {
    /// Validates `entries` against `feeder`: exactly the controllable buses,
    /// each setpoint finite and within `[0, q_max]`.
    pub fn new(feeder: &RadialFeeder, entries: BTreeMap<u32, f64>) -> Result<Self, SetpointError> {
        for id in feeder.controllable_buses() {
            if !entries.contains_key(&id) {
                return Err(SetpointError::FeederMismatch {
                    bus: id,
                    detail: "controllable bus missing from profile",
                });
            }
        }
        for (&bus, &value) in &entries {
            if (bus as usize) >= feeder.n_buses() || feeder.bus(bus).q_max == 0.0 {
                return Err(SetpointError::FeederMismatch {
                    bus,
                    detail: "bus is not controllable in this feeder",
                });
            }
            let limit = feeder.bus(bus).q_max;
            if !value.is_finite() || value < 0.0 || value > limit {
                return Err(SetpointError::OutOfRange { bus, value, limit });
            }
        }
        Ok(SetpointProfile { q_gen: entries })
    }

    /// Uniform zero setpoints (every controllable bus held at 0).
    pub fn zeros(feeder: &RadialFeeder) -> Self {
        let q_gen = feeder.controllable_buses().into_iter().map(|id| (id, 0.0)).collect();
        SetpointProfile { q_gen }
    }

    /// Setpoint for `bus`; buses outside the profile contribute nothing.
    pub fn q_gen(&self, bus: u32) -> f64 {
        self.q_gen.get(&bus).copied().unwrap_or(0.0)
    }

    /// `(bus, setpoint)` pairs in ascending bus order.
    pub fn entries(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.q_gen.iter().map(|(&b, &q)| (b, q))
    }

    pub fn len(&self) -> usize {
        self.q_gen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_gen.is_empty()
    }
}

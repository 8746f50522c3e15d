//! Loss-ordering certification on the canonical two-load chain, a closed-form
//! loss evaluator, a brute-force reference search, and seeded case generation.
//!
//! The canonical chain is `slack -> upstream -> leaf` with equal branch
//! resistances. Because the leaf's current crosses both branches, the total
//! series loss expands (at aligned voltage angles) to
//!
//! ```text
//! r * [ 2*(c_l^2 + w_l^2)/v_l^2
//!     + 2*(c_l*c_u + w_l*w_u)/(v_l*v_u)
//!     +   (c_u^2 + w_u^2)/v_u^2 ]
//! ```
//!
//! where `c` is net active withdrawal, `w = q_load - q_gen` is net reactive
//! withdrawal, and `v` is the voltage magnitude at the operating point
//! (`_l` leaf, `_u` upstream). The certifier evaluates orderings of this
//! closed form against orderings of exact solver losses.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::feeder::{
    Bus, FeederError, NodeClass, RadialFeeder, SetpointError, SetpointProfile,
};
use crate::powerflow::{solve, SolveError, SolvedState, SolverConfig};

use num_complex::Complex64;

/// Strict orderings must clear this margin to count as held.
pub const STRICT_TOLERANCE: f64 = 1e-12;

/// Bus id of the node adjacent to the slack in the canonical chain.
pub const UPSTREAM_BUS: u32 = 1;
/// Bus id of the end-of-chain node in the canonical chain.
pub const LEAF_BUS: u32 = 2;

/// Hard cap on controllable buses in a brute-force sweep.
pub const MAX_SWEEP_BUSES: usize = 6;
/// Largest grid the sweep will enumerate.
pub const MAX_SWEEP_SOLVES: u64 = 1_000_000;

/// One node of the canonical two-load chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeCase {
    /// Net active withdrawal at the node (pu); negative means net generation.
    pub p_net: f64,
    /// Reactive demand (pu).
    pub q_load: f64,
    /// Reactive generation capability (pu).
    pub q_max: f64,
    /// Standing no-action setpoint (pu), at most `min(q_load, q_max)`.
    pub q_baseline: f64,
}

impl NodeCase {
    fn validate(&self, which: &'static str) -> Result<(), AnalysisError> {
        let fields = [self.p_net, self.q_load, self.q_max, self.q_baseline];
        if fields.iter().any(|f| !f.is_finite()) {
            return Err(AnalysisError::InvalidCase(which, "non-finite field"));
        }
        if self.q_load < 0.0 {
            return Err(AnalysisError::InvalidCase(which, "q_load < 0"));
        }
        if self.q_max < 0.0 {
            return Err(AnalysisError::InvalidCase(which, "q_max < 0"));
        }
        if self.q_baseline < 0.0 || self.q_baseline > self.q_max {
            return Err(AnalysisError::InvalidCase(which, "q_baseline outside [0, q_max]"));
        }
        if self.q_baseline > self.q_load {
            return Err(AnalysisError::InvalidCase(which, "q_baseline exceeds q_load"));
        }
        Ok(())
    }

    /// Class under the same boundary rule as [`crate::feeder::classify_node`].
    pub fn class(&self) -> NodeClass {
        if self.q_max == 0.0 {
            NodeClass::Passive
        } else if self.q_max >= self.q_load {
            NodeClass::Sender
        } else {
            NodeClass::Recipient
        }
    }

    /// Load-tracking setpoint `min(q_load, q_max)`.
    pub fn heuristic_setpoint(&self) -> f64 {
        self.q_load.min(self.q_max)
    }
}

/// Parameters of a canonical `slack -> upstream -> leaf` chain with equal
/// branch resistances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBusCase {
    /// Resistance of each of the two branches (pu), strictly positive.
    pub branch_r: f64,
    /// Node adjacent to the slack.
    pub upstream: NodeCase,
    /// End-of-chain node.
    pub leaf: NodeCase,
}

impl TwoBusCase {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !self.branch_r.is_finite() || self.branch_r <= 0.0 {
            return Err(AnalysisError::InvalidCase("branch", "branch_r must be > 0"));
        }
        self.upstream.validate("upstream")?;
        self.leaf.validate("leaf")
    }
}

/// Analysis failure modes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid case ({0}): {1}")]
    InvalidCase(&'static str, &'static str),
    #[error("case classes do not match `{kind}`: {detail}")]
    ClassMismatch { kind: &'static str, detail: &'static str },
    #[error("precondition violated: {0}")]
    PreconditionViolated(&'static str),
    #[error("voltage magnitudes must be positive and finite")]
    NonpositiveVoltage,
    #[error("grid must have between 2 and 21 points per bus, got {points}")]
    InvalidGrid { points: usize },
    #[error("sweep of {solves} grid points exceeds the {MAX_SWEEP_SOLVES}-solve budget")]
    TooLarge { solves: u64 },
    #[error("every one of the {attempted} grid points diverged")]
    AllDiverged { attempted: u64 },
    #[error(transparent)]
    Feeder(#[from] FeederError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Setpoint(#[from] SetpointError),
}

/// Builds the canonical 3-bus chain for a case: slack (0) feeding the
/// upstream node (1) feeding the leaf (2), equal branch resistances, purely
/// resistive branches, and `p_net` mapped to load (or generation when negative).
pub fn build_canonical_feeder(case: &TwoBusCase) -> Result<RadialFeeder, AnalysisError> {
    case.validate()?;
    let node_bus = |id: u32, parent: u32, node: &NodeCase| Bus {
        id,
        parent: Some(parent),
        branch_r: case.branch_r,
        branch_x: 0.0,
        p_load: node.p_net.max(0.0),
        q_load: node.q_load,
        p_gen: (-node.p_net).max(0.0),
        q_max: node.q_max,
    };
    let buses = vec![
        Bus::slack(0),
        node_bus(UPSTREAM_BUS, 0, &case.upstream),
        node_bus(LEAF_BUS, UPSTREAM_BUS, &case.leaf),
    ];
    Ok(RadialFeeder::new(buses, Complex64::new(1.0, 0.0))?)
}

/// Closed-form series loss of the canonical chain at given setpoints and
/// operating-point voltage magnitudes (leaf term doubled: its current crosses
/// both branches).
pub fn closed_form_loss(
    case: &TwoBusCase,
    q_gen_leaf: f64,
    q_gen_upstream: f64,
    v_leaf: f64,
    v_upstream: f64,
) -> Result<f64, AnalysisError> {
    case.validate()?;
    if !v_leaf.is_finite() || !v_upstream.is_finite() || v_leaf <= 0.0 || v_upstream <= 0.0 {
        return Err(AnalysisError::NonpositiveVoltage);
    }
    let c_l = case.leaf.p_net;
    let c_u = case.upstream.p_net;
    let w_l = case.leaf.q_load - q_gen_leaf;
    let w_u = case.upstream.q_load - q_gen_upstream;
    Ok(case.branch_r
        * (2.0 * (c_l * c_l + w_l * w_l) / (v_leaf * v_leaf)
            + 2.0 * (c_l * c_u + w_l * w_u) / (v_leaf * v_upstream)
            + (c_u * c_u + w_u * w_u) / (v_upstream * v_upstream)))
}

/// How a certification evaluates losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Closed form evaluated at exact operating-point voltage magnitudes.
    ClosedForm,
    /// Total series loss from the exact solver.
    ExactPowerFlow,
}

impl Mode {
    pub fn token(self) -> &'static str {
        match self {
            Mode::ClosedForm => "closed",
            Mode::ExactPowerFlow => "exact",
        }
    }
}

/// The certified orderings. Every kind asserts a strict `left < right`
/// comparison between two operating points of the same case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CaseKind {
    /// Both nodes recipients: saturating both beats the standing baseline.
    BothRecipient,
    /// Leaf recipient, upstream sender: load tracking beats saturating everything.
    LeafRecipientVsSaturation,
    /// Leaf recipient, upstream sender: load tracking beats the standing baseline.
    LeafRecipientVsBaseline,
    /// Leaf sender, upstream recipient: load tracking beats saturating everything.
    UpstreamRecipientVsSaturation,
    /// Leaf sender, upstream recipient: load tracking beats the standing baseline.
    UpstreamRecipientVsBaseline,
    /// Both nodes senders: exact self-compensation beats the standing baseline.
    BothSender,
    /// The three equivalent forms of the leaf-term comparison agree and hold.
    FirstComponentDominance,
    /// Saturating recipients (within-demand compensation) never lowers any
    /// bus voltage relative to the baseline.
    VoltageOrdering,
}

/// All kinds, in the order reports enumerate them.
pub const ALL_CASE_KINDS: [CaseKind; 8] = [
    CaseKind::BothRecipient,
    CaseKind::LeafRecipientVsSaturation,
    CaseKind::LeafRecipientVsBaseline,
    CaseKind::UpstreamRecipientVsSaturation,
    CaseKind::UpstreamRecipientVsBaseline,
    CaseKind::BothSender,
    CaseKind::FirstComponentDominance,
    CaseKind::VoltageOrdering,
];

impl CaseKind {
    pub fn token(self) -> &'static str {
        match self {
            CaseKind::BothRecipient => "both-recipient",
            CaseKind::LeafRecipientVsSaturation => "leaf-recipient-vs-saturation",
            CaseKind::LeafRecipientVsBaseline => "leaf-recipient-vs-baseline",
            CaseKind::UpstreamRecipientVsSaturation => "upstream-recipient-vs-saturation",
            CaseKind::UpstreamRecipientVsBaseline => "upstream-recipient-vs-baseline",
            CaseKind::BothSender => "both-sender",
            CaseKind::FirstComponentDominance => "first-component-dominance",
            CaseKind::VoltageOrdering => "voltage-ordering",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        ALL_CASE_KINDS.iter().copied().find(|k| k.token() == token)
    }

    /// Node classes sampled when generating random trials of this kind.
    ///
    /// The voltage-ordering trials sample recipient pairs: there saturation
    /// stays within demand, so net reactive withdrawals shrink without
    /// changing sign and every voltage rises. Saturating a sender instead
    /// overshoots the local demand, and the resulting reverse flow can lower
    /// voltages — that regime is outside the claim (and is exactly why the
    /// tracking policy stops at `q_load`).
    pub fn class_spec(self) -> ClassSpec {
        let spec = |upstream, leaf| ClassSpec { upstream, leaf };
        match self {
            CaseKind::BothRecipient
            | CaseKind::FirstComponentDominance
            | CaseKind::VoltageOrdering => spec(NodeRole::Recipient, NodeRole::Recipient),
            CaseKind::LeafRecipientVsSaturation | CaseKind::LeafRecipientVsBaseline => {
                spec(NodeRole::Sender, NodeRole::Recipient)
            }
            CaseKind::UpstreamRecipientVsSaturation | CaseKind::UpstreamRecipientVsBaseline => {
                spec(NodeRole::Recipient, NodeRole::Sender)
            }
            CaseKind::BothSender => spec(NodeRole::Sender, NodeRole::Sender),
        }
    }

    /// Node classes a case must exhibit for this kind.
    fn check_classes(self, case: &TwoBusCase) -> Result<(), AnalysisError> {
        let kind = self.token();
        let need = |ok: bool, detail: &'static str| {
            if ok {
                Ok(())
            } else {
                Err(AnalysisError::ClassMismatch { kind, detail })
            }
        };
        let leaf = case.leaf.class();
        let upstream = case.upstream.class();
        match self {
            CaseKind::BothRecipient => {
                need(leaf == NodeClass::Recipient, "leaf must be a recipient")?;
                need(upstream == NodeClass::Recipient, "upstream must be a recipient")
            }
            CaseKind::LeafRecipientVsSaturation | CaseKind::LeafRecipientVsBaseline => {
                need(leaf == NodeClass::Recipient, "leaf must be a recipient")?;
                need(upstream == NodeClass::Sender, "upstream must be a sender")
            }
            CaseKind::UpstreamRecipientVsSaturation | CaseKind::UpstreamRecipientVsBaseline => {
                need(leaf == NodeClass::Sender, "leaf must be a sender")?;
                need(upstream == NodeClass::Recipient, "upstream must be a recipient")
            }
            CaseKind::BothSender => {
                need(leaf == NodeClass::Sender, "leaf must be a sender")?;
                need(upstream == NodeClass::Sender, "upstream must be a sender")
            }
            CaseKind::FirstComponentDominance => need(
                case.leaf.q_max < case.leaf.q_load,
                "leaf capability must fall short of its demand",
            ),
            CaseKind::VoltageOrdering => Ok(()),
        }
    }
}

/// Outcome of one certified comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseVerdict {
    pub kind: CaseKind,
    pub mode: Mode,
    /// Value the ordering asserts to be strictly smaller.
    pub left: f64,
    /// Value the ordering asserts to be strictly larger.
    pub right: f64,
    /// `right - left`; the ordering holds when this clears [`STRICT_TOLERANCE`].
    pub margin: f64,
    pub holds: bool,
    /// Solver iterations behind the (left, right) operating points.
    pub iterations: (usize, usize),
}

fn ordering_verdict(kind: CaseKind, mode: Mode, left: f64, right: f64, iterations: (usize, usize)) -> CaseVerdict {
    let margin = right - left;
    CaseVerdict {
        kind,
        mode,
        left,
        right,
        margin,
        holds: margin > STRICT_TOLERANCE,
        iterations,
    }
}

/// Setpoint pair (upstream, leaf) for one operating point of a case.
#[derive(Debug, Clone, Copy, PartialEq)]
enum OperatingPoint {
    Baseline,
    Heuristic,
    Saturated,
}

impl OperatingPoint {
    fn setpoints(self, case: &TwoBusCase) -> (f64, f64) {
        match self {
            OperatingPoint::Baseline => (case.upstream.q_baseline, case.leaf.q_baseline),
            OperatingPoint::Heuristic => (
                case.upstream.heuristic_setpoint(),
                case.leaf.heuristic_setpoint(),
            ),
            OperatingPoint::Saturated => (case.upstream.q_max, case.leaf.q_max),
        }
    }
}

fn case_profile(
    feeder: &RadialFeeder,
    q_upstream: f64,
    q_leaf: f64,
) -> Result<SetpointProfile, AnalysisError> {
    let mut entries = BTreeMap::new();
    if feeder.bus(UPSTREAM_BUS).q_max > 0.0 {
        entries.insert(UPSTREAM_BUS, q_upstream);
    }
    if feeder.bus(LEAF_BUS).q_max > 0.0 {
        entries.insert(LEAF_BUS, q_leaf);
    }
    Ok(SetpointProfile::new(feeder, entries)?)
}

struct SolvedPoint {
    setpoints: (f64, f64),
    state: SolvedState,
}

fn solve_point(
    feeder: &RadialFeeder,
    case: &TwoBusCase,
    point: OperatingPoint,
    config: &SolverConfig,
) -> Result<SolvedPoint, AnalysisError> {
    let setpoints = point.setpoints(case);
    let profile = case_profile(feeder, setpoints.0, setpoints.1)?;
    let state = solve(feeder, &profile, config)?;
    Ok(SolvedPoint { setpoints, state })
}

fn point_loss(case: &TwoBusCase, mode: Mode, point: &SolvedPoint) -> Result<f64, AnalysisError> {
    match mode {
        Mode::ExactPowerFlow => Ok(point.state.total_loss),
        Mode::ClosedForm => closed_form_loss(
            case,
            point.setpoints.1,
            point.setpoints.0,
            point.state.voltage_magnitude(LEAF_BUS),
            point.state.voltage_magnitude(UPSTREAM_BUS),
        ),
    }
}

/// Certifies one strict ordering on one case.
///
/// Loss orderings solve both operating points exactly; `mode` selects whether
/// the compared values are solver losses or the closed form evaluated at the
/// solved voltage magnitudes. The dominance and voltage-ordering kinds compare
/// solver-derived quantities directly and ignore the mode distinction.
pub fn certify_case(
    case: &TwoBusCase,
    kind: CaseKind,
    mode: Mode,
) -> Result<CaseVerdict, AnalysisError> {
    case.validate()?;
    kind.check_classes(case)?;
    let feeder = build_canonical_feeder(case)?;
    let config = SolverConfig::default();

    let loss_pair = |left: OperatingPoint, right: OperatingPoint| -> Result<CaseVerdict, AnalysisError> {
        let lp = solve_point(&feeder, case, left, &config)?;
        let rp = solve_point(&feeder, case, right, &config)?;
        Ok(ordering_verdict(
            kind,
            mode,
            point_loss(case, mode, &lp)?,
            point_loss(case, mode, &rp)?,
            (lp.state.iterations, rp.state.iterations),
        ))
    };

    match kind {
        CaseKind::BothRecipient => loss_pair(OperatingPoint::Saturated, OperatingPoint::Baseline),
        CaseKind::LeafRecipientVsSaturation | CaseKind::UpstreamRecipientVsSaturation => {
            loss_pair(OperatingPoint::Heuristic, OperatingPoint::Saturated)
        }
        CaseKind::LeafRecipientVsBaseline
        | CaseKind::UpstreamRecipientVsBaseline
        | CaseKind::BothSender => loss_pair(OperatingPoint::Heuristic, OperatingPoint::Baseline),
        CaseKind::FirstComponentDominance => {
            let base = solve_point(&feeder, case, OperatingPoint::Baseline, &config)?;
            let sat = solve_point(&feeder, case, OperatingPoint::Saturated, &config)?;
            let mut verdict = check_first_component_dominance(
                case,
                base.state.voltage_magnitude(LEAF_BUS),
                sat.state.voltage_magnitude(LEAF_BUS),
            )?;
            verdict.mode = mode;
            verdict.iterations = (base.state.iterations, sat.state.iterations);
            Ok(verdict)
        }
        CaseKind::VoltageOrdering => {
            let base = solve_point(&feeder, case, OperatingPoint::Baseline, &config)?;
            let sat = solve_point(&feeder, case, OperatingPoint::Saturated, &config)?;
            // The ordering must hold at every bus; report the tightest one.
            let mut worst: Option<(f64, f64)> = None;
            for id in [UPSTREAM_BUS, LEAF_BUS] {
                let vb = base.state.voltage_magnitude(id);
                let vs = sat.state.voltage_magnitude(id);
                if worst.is_none_or(|(wb, ws)| vs - vb < ws - wb) {
                    worst = Some((vb, vs));
                }
            }
            let (vb, vs) = worst.expect("two candidate buses");
            Ok(ordering_verdict(
                kind,
                mode,
                vb,
                vs,
                (base.state.iterations, sat.state.iterations),
            ))
        }
    }
}

/// Evaluates the leaf-term comparison between the baseline and saturated
/// operating points in its three algebraically equivalent forms and asserts
/// they agree.
///
/// The three forms (cross-multiplied, scaled, and voltage-normalized) are the
/// same inequality rearranged; disagreement would indicate a numerical-
/// robustness bug, so it is a hard assertion rather than a verdict.
///
/// Preconditions: the leaf's capability falls short of its demand
/// (`q_max < q_load`), and the voltage magnitudes satisfy
/// `0 < v_baseline <= v_saturated` (equal voltages are allowed and can only
/// yield equality, reported as `holds == false`).
pub fn check_first_component_dominance(
    case: &TwoBusCase,
    v_baseline: f64,
    v_saturated: f64,
) -> Result<CaseVerdict, AnalysisError> {
    case.validate()?;
    if case.leaf.q_max >= case.leaf.q_load {
        return Err(AnalysisError::PreconditionViolated(
            "leaf q_max must be strictly below q_load",
        ));
    }
    if !v_baseline.is_finite() || !v_saturated.is_finite() || v_baseline <= 0.0 || v_saturated <= 0.0
    {
        return Err(AnalysisError::NonpositiveVoltage);
    }
    if v_baseline > v_saturated {
        return Err(AnalysisError::PreconditionViolated(
            "baseline voltage must not exceed saturated voltage",
        ));
    }

    let c2 = case.leaf.p_net * case.leaf.p_net;
    let q_load2 = case.leaf.q_load * case.leaf.q_load;
    let shortfall = case.leaf.q_max - case.leaf.q_load;
    let shortfall2 = shortfall * shortfall;
    let vb2 = v_baseline * v_baseline;
    let vs2 = v_saturated * v_saturated;

    // Cross-multiplied: c^2 (vs^2 - vb^2) > shortfall^2 vb^2 - q_load^2 vs^2.
    let margin_cross = c2 * (vs2 - vb2) - (shortfall2 * vb2 - q_load2 * vs2);
    // Scaled: vs^2 (c^2 + q_load^2) > vb^2 (c^2 + shortfall^2).
    let margin_scaled = vs2 * (c2 + q_load2) - vb2 * (c2 + shortfall2);
    // Voltage-normalized: 2(c^2 + q_load^2)/vb^2 > 2(c^2 + shortfall^2)/vs^2.
    let baseline_term = 2.0 * (c2 + q_load2) / vb2;
    let saturated_term = 2.0 * (c2 + shortfall2) / vs2;
    let margin_normalized = baseline_term - saturated_term;

    let holds = [margin_cross, margin_scaled, margin_normalized]
        .map(|m| m > STRICT_TOLERANCE);
    assert!(
        holds[0] == holds[1] && holds[1] == holds[2],
        "equivalent dominance forms disagree: cross={margin_cross:e} scaled={margin_scaled:e} normalized={margin_normalized:e}"
    );

    Ok(ordering_verdict(
        CaseKind::FirstComponentDominance,
        Mode::ExactPowerFlow,
        saturated_term,
        baseline_term,
        (0, 0),
    ))
}

/// Result of a brute-force setpoint sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Loss-minimizing profile; ties go to the lexicographically smallest
    /// profile in ascending bus order.
    pub best: SetpointProfile,
    /// Exact solver loss at `best` (pu).
    pub loss: f64,
    /// Grid points that converged.
    pub evaluated: u64,
    /// Grid points skipped because the solver diverged there.
    pub skipped: u64,
}

/// Exhaustively evaluates every combination of per-bus setpoints on a uniform
/// grid (endpoints `0` and `q_max` included exactly) and returns the
/// loss-minimizing profile.
pub fn brute_force_best(
    feeder: &RadialFeeder,
    grid_points_per_bus: usize,
    config: &SolverConfig,
) -> Result<SweepResult, AnalysisError> {
    if !(2..=21).contains(&grid_points_per_bus) {
        return Err(AnalysisError::InvalidGrid {
            points: grid_points_per_bus,
        });
    }
    let ctrl = feeder.controllable_buses();
    let total: u64 = (grid_points_per_bus as u64)
        .checked_pow(ctrl.len() as u32)
        .unwrap_or(u64::MAX);
    if ctrl.len() > MAX_SWEEP_BUSES || total > MAX_SWEEP_SOLVES {
        return Err(AnalysisError::TooLarge { solves: total });
    }

    let grids: Vec<Vec<f64>> = ctrl
        .iter()
        .map(|&id| {
            let q_max = feeder.bus(id).q_max;
            (0..grid_points_per_bus)
                .map(|j| {
                    if j + 1 == grid_points_per_bus {
                        q_max // exact upper endpoint, no rounding residue
                    } else {
                        q_max * j as f64 / (grid_points_per_bus - 1) as f64
                    }
                })
                .collect()
        })
        .collect();

    let mut digits = vec![0usize; ctrl.len()];
    let mut best: Option<(SetpointProfile, f64)> = None;
    let mut evaluated = 0u64;
    let mut skipped = 0u64;
    let mut exhausted = false;
    while !exhausted {
        let entries: BTreeMap<u32, f64> = ctrl
            .iter()
            .zip(&grids)
            .zip(&digits)
            .map(|((&id, grid), &j)| (id, grid[j]))
            .collect();
        let profile = SetpointProfile::new(feeder, entries)?;
        match solve(feeder, &profile, config) {
            Ok(state) => {
                evaluated += 1;
                // Strict improvement only: enumeration is lexicographic
                // ascending, so ties keep the earlier (smaller) profile.
                if best.as_ref().is_none_or(|(_, l)| state.total_loss < *l) {
                    best = Some((profile, state.total_loss));
                }
            }
            Err(SolveError::Diverged { .. }) => skipped += 1,
            Err(e) => return Err(e.into()),
        }

        // Advance the mixed-radix counter; the first bus is the most
        // significant digit, so enumeration order is lexicographic.
        exhausted = true;
        for pos in (0..digits.len()).rev() {
            digits[pos] += 1;
            if digits[pos] < grid_points_per_bus {
                exhausted = false;
                break;
            }
            digits[pos] = 0;
        }
    }

    match best {
        Some((best, loss)) => Ok(SweepResult {
            best,
            loss,
            evaluated,
            skipped,
        }),
        None => Err(AnalysisError::AllDiverged {
            attempted: evaluated + skipped,
        }),
    }
}

/// Role a generated node must play.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Sender,
    Recipient,
}

/// Node roles for a generated two-load case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassSpec {
    pub upstream: NodeRole,
    pub leaf: NodeRole,
}

// Sampling ranges for generated cases. Recipients draw a capability strictly
// inside (0, q_load); senders draw a surplus above q_load. A saturated
// sender's surplus offsets recipient demand locally, so orderings against
// saturate-everything are strict only when the surplus exceeds the offsettable
// demand — twice the worst recipient shortfall when the recipient hangs
// downstream of the sender. SENDER_SURPLUS's lower end (0.30) clears that
// worst case (2 * 0.7 * 0.2 = 0.28) with margin.
const BRANCH_R_RANGE: (f64, f64) = (0.005, 0.05);
const P_NET_RANGE: (f64, f64) = (0.0, 0.2);
const Q_LOAD_RANGE: (f64, f64) = (0.01, 0.2);
const RECIPIENT_FRACTION: (f64, f64) = (0.30, 0.90);
const SENDER_SURPLUS: (f64, f64) = (0.30, 0.60);

fn uniform(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    range.0 + rng.gen::<f64>() * (range.1 - range.0)
}

/// Deterministic pseudo-random case of the requested classes.
///
/// The same `(seed, spec)` always yields the same case, byte for byte.
pub fn random_case(seed: u64, spec: ClassSpec) -> TwoBusCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let branch_r = uniform(&mut rng, BRANCH_R_RANGE);
    let mut node = |role: NodeRole| {
        let p_net = uniform(&mut rng, P_NET_RANGE);
        let q_load = uniform(&mut rng, Q_LOAD_RANGE);
        let q_max = match role {
            NodeRole::Recipient => q_load * uniform(&mut rng, RECIPIENT_FRACTION),
            NodeRole::Sender => q_load + uniform(&mut rng, SENDER_SURPLUS),
        };
        NodeCase {
            p_net,
            q_load,
            q_max,
            q_baseline: 0.0,
        }
    };
    let upstream = node(spec.upstream);
    let leaf = node(spec.leaf);
    TwoBusCase {
        branch_r,
        upstream,
        leaf,
    }
}

/// Ranges for seeded whole-feeder generation.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomFeederSpec {
    pub min_buses: usize,
    pub max_buses: usize,
    /// Per-branch resistance and reactance are each drawn from this range.
    pub impedance_range: (f64, f64),
    /// Per-bus active and reactive demand are each drawn from this range.
    pub load_range: (f64, f64),
    /// Capability of buses selected as controllable.
    pub q_max_range: (f64, f64),
    /// Cap on how many buses get controllable generation.
    pub max_controllable: usize,
}

impl Default for RandomFeederSpec {
    fn default() -> Self {
        RandomFeederSpec {
            min_buses: 3,
            max_buses: 8,
            impedance_range: (0.005, 0.05),
            load_range: (0.0, 0.2),
            q_max_range: (0.05, 0.25),
            max_controllable: usize::MAX,
        }
    }
}

/// Deterministic pseudo-random radial feeder: a uniformly random tree with
/// draws from the ranges in `spec`.
pub fn random_feeder(seed: u64, spec: &RandomFeederSpec) -> RadialFeeder {
    assert!(spec.min_buses >= 2 && spec.max_buses >= spec.min_buses);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(spec.min_buses..=spec.max_buses);

    let mut buses = vec![Bus::slack(0)];
    for id in 1..n as u32 {
        let parent = rng.gen_range(0..id);
        buses.push(Bus {
            id,
            parent: Some(parent),
            branch_r: uniform(&mut rng, spec.impedance_range),
            branch_x: uniform(&mut rng, spec.impedance_range),
            p_load: uniform(&mut rng, spec.load_range),
            q_load: uniform(&mut rng, spec.load_range),
            p_gen: 0.0,
            q_max: 0.0,
        });
    }

    // Pick the controllable subset by index draws without replacement.
    let n_ctrl = rng.gen_range(0..=spec.max_controllable.min(n - 1));
    let mut candidates: Vec<u32> = (1..n as u32).collect();
    for _ in 0..n_ctrl {
        let pick = rng.gen_range(0..candidates.len());
        let id = candidates.swap_remove(pick);
        buses[id as usize].q_max = uniform(&mut rng, spec.q_max_range);
    }

    RadialFeeder::new(buses, Complex64::new(1.0, 0.0)).expect("generated feeder is a valid tree")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recipient(q_load: f64, q_max: f64) -> NodeCase {
        assert!(q_max < q_load);
        NodeCase {
            p_net: 0.1,
            q_load,
            q_max,
            q_baseline: 0.0,
        }
    }

    fn sender(q_load: f64, q_max: f64) -> NodeCase {
        assert!(q_max >= q_load);
        NodeCase {
            p_net: 0.08,
            q_load,
            q_max,
            q_baseline: 0.0,
        }
    }

    fn both_recipient_case() -> TwoBusCase {
        TwoBusCase {
            branch_r: 0.02,
            upstream: recipient(0.09, 0.03),
            leaf: recipient(0.10, 0.04),
        }
    }

    #[test]
    fn canonical_feeder_maps_net_withdrawal_to_load_or_generation() {
        let mut case = both_recipient_case();
        case.leaf.p_net = -0.05; // net generation
        let feeder = build_canonical_feeder(&case).unwrap();
        assert_eq!(feeder.bus(LEAF_BUS).p_gen, 0.05);
        assert_eq!(feeder.bus(LEAF_BUS).p_load, 0.0);
        assert_eq!(feeder.bus(UPSTREAM_BUS).p_load, 0.1);
        assert_eq!(feeder.bus(UPSTREAM_BUS).parent, Some(0));
        assert_eq!(feeder.bus(LEAF_BUS).parent, Some(UPSTREAM_BUS));
        assert_eq!(feeder.bus(LEAF_BUS).branch_r, 0.02);
        assert_eq!(feeder.bus(LEAF_BUS).branch_x, 0.0);
    }

    #[test]
    fn invalid_cases_are_rejected() {
        let mut case = both_recipient_case();
        case.branch_r = 0.0;
        assert!(matches!(
            build_canonical_feeder(&case),
            Err(AnalysisError::InvalidCase("branch", _))
        ));

        let mut case = both_recipient_case();
        case.leaf.q_baseline = case.leaf.q_max + 0.01;
        assert!(matches!(
            case.validate(),
            Err(AnalysisError::InvalidCase("leaf", _))
        ));
    }

    #[test]
    fn closed_form_is_zero_for_a_dead_feeder() {
        let case = TwoBusCase {
            branch_r: 0.02,
            upstream: NodeCase {
                p_net: 0.0,
                q_load: 0.0,
                q_max: 0.0,
                q_baseline: 0.0,
            },
            leaf: NodeCase {
                p_net: 0.0,
                q_load: 0.0,
                q_max: 0.0,
                q_baseline: 0.0,
            },
        };
        let loss = closed_form_loss(&case, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn closed_form_rejects_collapsed_voltages() {
        let case = both_recipient_case();
        assert!(matches!(
            closed_form_loss(&case, 0.0, 0.0, 0.0, 1.0),
            Err(AnalysisError::NonpositiveVoltage)
        ));
    }

    #[test]
    fn closed_form_matches_the_term_by_term_expansion() {
        // Independent evaluation, term by term, at unequal voltages.
        let case = both_recipient_case();
        let (q_u, q_l) = (0.02, 0.03);
        let (v_u, v_l) = (0.995f64, 0.99f64);
        let w_l = case.leaf.q_load - q_l;
        let w_u = case.upstream.q_load - q_u;
        let leaf_term = 2.0 * (case.leaf.p_net.powi(2) + w_l.powi(2)) / v_l.powi(2);
        let cross_term = 2.0 * (case.leaf.p_net * case.upstream.p_net + w_l * w_u) / (v_l * v_u);
        let upstream_term = (case.upstream.p_net.powi(2) + w_u.powi(2)) / v_u.powi(2);
        let expected = case.branch_r * (leaf_term + cross_term + upstream_term);
        let got = closed_form_loss(&case, q_l, q_u, v_l, v_u).unwrap();
        assert!((got - expected).abs() < 1e-18);
    }

    #[test]
    fn saturating_both_recipients_beats_the_baseline_in_both_modes() {
        let case = both_recipient_case();
        for mode in [Mode::ClosedForm, Mode::ExactPowerFlow] {
            let verdict = certify_case(&case, CaseKind::BothRecipient, mode).unwrap();
            assert!(verdict.holds, "{mode:?}: {verdict:?}");
            assert!(verdict.margin > 1e-6);
        }
    }

    #[test]
    fn swapping_comparison_operands_flips_the_verdict() {
        let v = ordering_verdict(CaseKind::BothRecipient, Mode::ExactPowerFlow, 2.0e-4, 3.0e-4, (5, 5));
        assert!(v.holds);
        let swapped = ordering_verdict(CaseKind::BothRecipient, Mode::ExactPowerFlow, v.right, v.left, (5, 5));
        assert!(!swapped.holds);
        assert_eq!(swapped.margin, -v.margin);
    }

    #[test]
    fn class_mismatch_is_rejected() {
        let case = both_recipient_case();
        assert!(matches!(
            certify_case(&case, CaseKind::BothSender, Mode::ExactPowerFlow),
            Err(AnalysisError::ClassMismatch { .. })
        ));
    }

    #[test]
    fn both_sender_self_compensation_beats_baseline() {
        let case = TwoBusCase {
            branch_r: 0.02,
            upstream: sender(0.06, 0.10),
            leaf: sender(0.05, 0.05),
        };
        for mode in [Mode::ClosedForm, Mode::ExactPowerFlow] {
            let verdict = certify_case(&case, CaseKind::BothSender, mode).unwrap();
            assert!(verdict.holds, "{mode:?}: {verdict:?}");
        }
    }

    #[test]
    fn mixed_class_orderings_hold_when_the_sender_surplus_dominates() {
        let case = TwoBusCase {
            branch_r: 0.02,
            upstream: sender(0.08, 0.45), // surplus 0.37
            leaf: recipient(0.10, 0.04),  // shortfall 0.06
        };
        for kind in [
            CaseKind::LeafRecipientVsSaturation,
            CaseKind::LeafRecipientVsBaseline,
        ] {
            for mode in [Mode::ClosedForm, Mode::ExactPowerFlow] {
                let verdict = certify_case(&case, kind, mode).unwrap();
                assert!(verdict.holds, "{kind:?}/{mode:?}: {verdict:?}");
            }
        }
    }

    #[test]
    fn small_sender_surplus_honestly_fails_the_saturation_ordering() {
        // With a small surplus the saturated sender covers part of the leaf's
        // residual demand locally, so saturate-everything beats load tracking
        // and the strict ordering is reported as not holding.
        let case = TwoBusCase {
            branch_r: 0.02,
            upstream: sender(0.08, 0.10), // surplus 0.02
            leaf: recipient(0.10, 0.04),  // shortfall 0.06 (offsettable: 0.12)
        };
        for mode in [Mode::ClosedForm, Mode::ExactPowerFlow] {
            let verdict =
                certify_case(&case, CaseKind::LeafRecipientVsSaturation, mode).unwrap();
            assert!(!verdict.holds, "{mode:?}: {verdict:?}");
            // The baseline ordering is regime-independent and still holds.
            let baseline =
                certify_case(&case, CaseKind::LeafRecipientVsBaseline, mode).unwrap();
            assert!(baseline.holds);
        }
    }

    #[test]
    fn upstream_recipient_orderings_hold_when_the_sender_surplus_dominates() {
        let case = TwoBusCase {
            branch_r: 0.02,
            upstream: recipient(0.10, 0.04), // shortfall 0.06
            leaf: sender(0.08, 0.45),        // surplus 0.37
        };
        for kind in [
            CaseKind::UpstreamRecipientVsSaturation,
            CaseKind::UpstreamRecipientVsBaseline,
        ] {
            for mode in [Mode::ClosedForm, Mode::ExactPowerFlow] {
                let verdict = certify_case(&case, kind, mode).unwrap();
                assert!(verdict.holds, "{kind:?}/{mode:?}: {verdict:?}");
            }
        }
    }

    #[test]
    fn dominance_forms_agree_on_random_valid_inputs() {
        for seed in 0..1000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q_load = 0.01 + rng.gen::<f64>() * 0.19;
            let case = TwoBusCase {
                branch_r: 0.02,
                upstream: recipient(0.1, 0.05),
                leaf: NodeCase {
                    p_net: rng.gen::<f64>() * 0.2,
                    q_load,
                    q_max: q_load * rng.gen::<f64>() * 0.99,
                    q_baseline: 0.0,
                },
            };
            let v_base = 0.9 + rng.gen::<f64>() * 0.19;
            let v_sat = v_base + rng.gen::<f64>() * (1.1 - v_base);
            // Agreement is asserted inside; reaching Ok is the test.
            let verdict = check_first_component_dominance(&case, v_base, v_sat).unwrap();
            assert_eq!(verdict.holds, verdict.margin > STRICT_TOLERANCE);
        }
    }

    #[test]
    fn dominance_equality_boundary_reports_false_without_error() {
        let mut case = both_recipient_case();
        case.leaf.q_max = 0.0; // saturation adds nothing
        let verdict = check_first_component_dominance(&case, 0.97, 0.97).unwrap();
        assert!(!verdict.holds);
        assert_eq!(verdict.margin, 0.0);
    }

    #[test]
    fn dominance_preconditions_are_enforced() {
        let case = both_recipient_case();
        assert!(matches!(
            check_first_component_dominance(&case, 0.99, 0.97),
            Err(AnalysisError::PreconditionViolated(_))
        ));
        assert!(matches!(
            check_first_component_dominance(&case, 0.0, 0.97),
            Err(AnalysisError::NonpositiveVoltage)
        ));
        let mut sender_leaf = both_recipient_case();
        sender_leaf.leaf.q_max = sender_leaf.leaf.q_load + 0.1;
        assert!(matches!(
            check_first_component_dominance(&sender_leaf, 0.97, 0.99),
            Err(AnalysisError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn voltage_ordering_holds_on_recipient_cases() {
        let verdict = certify_case(
            &both_recipient_case(),
            CaseKind::VoltageOrdering,
            Mode::ExactPowerFlow,
        )
        .unwrap();
        assert!(verdict.holds, "{verdict:?}");
    }

    #[test]
    fn random_case_is_deterministic_and_class_conformant() {
        let spec = ClassSpec {
            upstream: NodeRole::Sender,
            leaf: NodeRole::Recipient,
        };
        let a = random_case(42, spec);
        let b = random_case(42, spec);
        assert_eq!(a, b);
        assert_ne!(a, random_case(43, spec));
        assert_eq!(a.upstream.class(), NodeClass::Sender);
        assert_eq!(a.leaf.class(), NodeClass::Recipient);
        a.validate().unwrap();
    }

    #[test]
    fn random_cases_stay_in_their_documented_ranges() {
        for seed in 0..2000u64 {
            for spec in [
                ClassSpec { upstream: NodeRole::Recipient, leaf: NodeRole::Recipient },
                ClassSpec { upstream: NodeRole::Sender, leaf: NodeRole::Recipient },
                ClassSpec { upstream: NodeRole::Recipient, leaf: NodeRole::Sender },
                ClassSpec { upstream: NodeRole::Sender, leaf: NodeRole::Sender },
            ] {
                let case = random_case(seed, spec);
                case.validate().unwrap();
                for node in [&case.upstream, &case.leaf] {
                    assert!((0.0..=0.2).contains(&node.p_net));
                    assert!((0.01..=0.2).contains(&node.q_load));
                    assert_eq!(node.q_baseline, 0.0);
                }
                assert!((0.005..=0.05).contains(&case.branch_r));
            }
        }
    }

    #[test]
    fn brute_force_on_a_dead_feeder_returns_all_zeros() {
        let feeder = RadialFeeder::new(
            vec![
                Bus::slack(0),
                Bus {
                    id: 1,
                    parent: Some(0),
                    branch_r: 0.01,
                    branch_x: 0.0,
                    p_load: 0.0,
                    q_load: 0.0,
                    p_gen: 0.0,
                    q_max: 0.1,
                },
            ],
            Complex64::new(1.0, 0.0),
        )
        .unwrap();
        let sweep = brute_force_best(&feeder, 11, &SolverConfig::default()).unwrap();
        assert_eq!(sweep.best.q_gen(1), 0.0);
        assert_eq!(sweep.loss, 0.0);
        assert_eq!(sweep.evaluated, 11);
        assert_eq!(sweep.skipped, 0);
    }

    #[test]
    fn brute_force_grid_includes_exact_endpoints() {
        let case = both_recipient_case();
        let feeder = build_canonical_feeder(&case).unwrap();
        let sweep = brute_force_best(&feeder, 2, &SolverConfig::default()).unwrap();
        // With endpoints only, every candidate setpoint is 0 or exactly q_max.
        for (bus, q) in sweep.best.entries() {
            assert!(q == 0.0 || q == feeder.bus(bus).q_max);
        }
        // Both nodes recipients: the optimum saturates both.
        assert_eq!(sweep.best.q_gen(UPSTREAM_BUS), case.upstream.q_max);
        assert_eq!(sweep.best.q_gen(LEAF_BUS), case.leaf.q_max);
    }

    #[test]
    fn brute_force_rejects_oversized_searches() {
        let buses: Vec<Bus> = std::iter::once(Bus::slack(0))
            .chain((1..=7u32).map(|id| Bus {
                id,
                parent: Some(0),
                branch_r: 0.01,
                branch_x: 0.0,
                p_load: 0.01,
                q_load: 0.01,
                p_gen: 0.0,
                q_max: 0.05,
            }))
            .collect();
        let feeder = RadialFeeder::new(buses, Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(
            brute_force_best(&feeder, 5, &SolverConfig::default()),
            Err(AnalysisError::TooLarge { .. })
        ));
    }

    #[test]
    fn brute_force_rejects_degenerate_grids() {
        let feeder = build_canonical_feeder(&both_recipient_case()).unwrap();
        for points in [0, 1, 22] {
            assert!(matches!(
                brute_force_best(&feeder, points, &SolverConfig::default()),
                Err(AnalysisError::InvalidGrid { .. })
            ));
        }
    }

    #[test]
    fn random_feeder_is_deterministic_and_respects_caps() {
        let spec = RandomFeederSpec {
            max_controllable: 4,
            ..RandomFeederSpec::default()
        };
        for seed in 0..50 {
            let f = random_feeder(seed, &spec);
            assert_eq!(f, random_feeder(seed, &spec));
            assert!((3..=8).contains(&f.n_buses()));
            assert!(f.controllable_buses().len() <= 4);
        }
    }
}

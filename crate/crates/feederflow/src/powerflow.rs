//! Backward-forward sweep power flow for radial feeders.
//!
//! Model conventions:
//! - complex injections are withdrawals: `S_i = (p_load - p_gen) + j(q_load - q_gen)`,
//! - nodal current `I_i = conj(S_i / V_i)`,
//! - the branch current into bus `k` from its parent equals `I_k` plus the
//!   branch currents into all children of `k` (Kirchhoff on the subtree),
//! - forward update `V_k = V_parent - (branch_r + j*branch_x) * I_branch_k`,
//! - iteration starts flat (every bus at the slack voltage) and stops when the
//!   largest per-bus voltage change drops to the configured tolerance.
//!
//! Reported angles follow the lagging-positive convention `phi = -arg(V)`.

use num_complex::Complex64;
use thiserror::Error;

use crate::feeder::{Bus, RadialFeeder, SetpointError, SetpointProfile};

/// Iteration limits for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Convergence threshold on the largest per-bus voltage change (pu).
    pub tolerance: f64,
    /// Iteration cap; exceeding it is reported as divergence.
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-10,
            max_iterations: 100,
        }
    }
}

/// Power-flow failure modes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("power flow did not converge within {iterations} iterations")]
    Diverged { iterations: usize },
    #[error("voltage magnitude collapsed to zero during iteration")]
    ZeroVoltage,
    #[error(transparent)]
    Setpoint(#[from] SetpointError),
}

/// Converged operating point of a feeder.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvedState {
    /// Bus voltages, indexed by bus id.
    pub voltages: Vec<Complex64>,
    /// Nodal withdrawal currents `conj(S_i / V_i)`, indexed by bus id.
    /// The slack has no specified injection; its entry is zero.
    pub nodal_currents: Vec<Complex64>,
    /// Current flowing from `parent(k)` into bus `k`, indexed by bus id.
    /// The slack entry is zero (it has no upstream branch).
    pub branch_currents: Vec<Complex64>,
    /// Sum of `branch_r * |I_branch|^2` over all branches (pu).
    pub total_loss: f64,
    /// Iterations actually performed.
    pub iterations: usize,
    /// Largest per-bus voltage change at the final iteration (pu).
    pub residual: f64,
    /// Residual after each iteration, in order; the last entry equals `residual`.
    pub residual_history: Vec<f64>,
}

impl SolvedState {
    /// Voltage magnitude at `bus` (pu).
    pub fn voltage_magnitude(&self, bus: u32) -> f64 {
        self.voltages[bus as usize].norm()
    }

    /// Voltage angle at `bus` under the lagging-positive convention `phi = -arg(V)`.
    pub fn voltage_angle(&self, bus: u32) -> f64 {
        -self.voltages[bus as usize].arg()
    }
}

/// Complex power withdrawn at a bus: `(p_load - p_gen) + j*(q_load - q_gen)`.
///
/// The reactive setpoint must lie in `[0, q_max]`.
pub fn nodal_injection(bus: &Bus, q_gen: f64) -> Result<Complex64, SetpointError> {
    if !q_gen.is_finite() || q_gen < 0.0 || q_gen > bus.q_max {
        return Err(SetpointError::OutOfRange {
            bus: bus.id,
            value: q_gen,
            limit: bus.q_max,
        });
    }
    Ok(Complex64::new(bus.p_load - bus.p_gen, bus.q_load - q_gen))
}

/// Nodal withdrawal current `conj(injection / voltage)`.
pub fn nodal_current(injection: Complex64, voltage: Complex64) -> Result<Complex64, SolveError> {
    if voltage.norm_sqr() == 0.0 {
        return Err(SolveError::ZeroVoltage);
    }
    Ok((injection / voltage).conj())
}

/// Branch currents by Kirchhoff's current law: the current into bus `k`
/// equals `I_k` plus the branch currents into its children.
///
/// `nodal_currents` is indexed by bus id; the returned vector likewise, with a
/// zero entry at the slack.
pub fn sweep_branch_currents(feeder: &RadialFeeder, nodal_currents: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(nodal_currents.len(), feeder.n_buses());
    let mut branch = vec![Complex64::new(0.0, 0.0); feeder.n_buses()];
    // Children before parents: reverse of the parents-first order.
    for &id in feeder.topo_order().iter().rev() {
        let mut sum = nodal_currents[id as usize];
        for &c in feeder.children(id) {
            sum += branch[c as usize];
        }
        if feeder.bus(id).parent.is_some() {
            branch[id as usize] = sum;
        }
    }
    branch
}

/// Voltages from a forward pass: the slack holds its reference and every
/// other bus sees its parent's voltage minus the branch drop.
pub fn forward_voltage_update(feeder: &RadialFeeder, branch_currents: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(branch_currents.len(), feeder.n_buses());
    let mut v = vec![feeder.slack_voltage(); feeder.n_buses()];
    for &id in &feeder.topo_order()[1..] {
        let parent = feeder.bus(id).parent.expect("non-slack bus");
        v[id as usize] =
            v[parent as usize] - feeder.branch_impedance(id) * branch_currents[id as usize];
    }
    v
}

/// Total series loss `sum(branch_r * |I_branch|^2)` over all branches (pu).
pub fn total_losses(feeder: &RadialFeeder, branch_currents: &[Complex64]) -> f64 {
    assert_eq!(branch_currents.len(), feeder.n_buses());
    feeder
        .buses()
        .iter()
        .filter(|b| b.parent.is_some())
        .map(|b| b.branch_r * branch_currents[b.id as usize].norm_sqr())
        .sum()
}

/// Complex power the slack injects into the feeder:
/// `V_slack * conj(sum of branch currents into the slack's children)`.
pub fn slack_power(feeder: &RadialFeeder, state: &SolvedState) -> Complex64 {
    let into_children: Complex64 = feeder
        .children(feeder.slack_id())
        .iter()
        .map(|&c| state.branch_currents[c as usize])
        .sum();
    feeder.slack_voltage() * into_children.conj()
}

/// Runs the backward-forward sweep from a flat start until the voltage
/// residual drops to `config.tolerance`.
///
/// Divergence (iteration cap hit, a collapsed voltage, or a non-finite
/// intermediate) is an error, never a silent partial result.
pub fn solve(
    feeder: &RadialFeeder,
    profile: &SetpointProfile,
    config: &SolverConfig,
) -> Result<SolvedState, SolveError> {
    let n = feeder.n_buses();
    let mut voltages = vec![feeder.slack_voltage(); n];
    let mut nodal = vec![Complex64::new(0.0, 0.0); n];
    let mut history = Vec::new();

    for iteration in 1..=config.max_iterations {
        for bus in feeder.buses() {
            if bus.parent.is_none() {
                continue;
            }
            let s = nodal_injection(bus, profile.q_gen(bus.id))?;
            let i = match nodal_current(s, voltages[bus.id as usize]) {
                Ok(i) => i,
                Err(SolveError::ZeroVoltage) => {
                    return Err(SolveError::Diverged { iterations: iteration })
                }
                Err(e) => return Err(e),
            };
            nodal[bus.id as usize] = i;
        }

        let branch = sweep_branch_currents(feeder, &nodal);

        // Forward pass; parents are refreshed before their children, so each
        // child drop applies to the parent's updated voltage.
        let mut residual = 0.0f64;
        for &id in &feeder.topo_order()[1..] {
            let parent = feeder.bus(id).parent.expect("non-slack bus");
            let next =
                voltages[parent as usize] - feeder.branch_impedance(id) * branch[id as usize];
            residual = residual.max((next - voltages[id as usize]).norm());
            voltages[id as usize] = next;
        }

        if !residual.is_finite() || voltages.iter().any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(SolveError::Diverged { iterations: iteration });
        }
        history.push(residual);

        if residual <= config.tolerance {
            let total_loss = total_losses(feeder, &branch);
            return Ok(SolvedState {
                voltages,
                nodal_currents: nodal,
                branch_currents: branch,
                total_loss,
                iterations: iteration,
                residual,
                residual_history: history,
            });
        }
    }

    Err(SolveError::Diverged {
        iterations: config.max_iterations,
    })
}

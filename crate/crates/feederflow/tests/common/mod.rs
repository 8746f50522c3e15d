//! Independent numeric oracles shared by the integration suites.
//!
//! Everything here computes from raw `(re, im)` tuples, its own tree walks,
//! and its own linear algebra — none of the crate's numeric helpers — so
//! agreement between an oracle and the library is evidence, not the same
//! code evaluated twice.

#![allow(dead_code)]

use feederflow::feeder::{RadialFeeder, SetpointProfile};
use feederflow::powerflow::SolvedState;
use num_complex::Complex64;

/// Raw complex number as an (re, im) tuple.
pub type C = (f64, f64);

pub fn add(a: C, b: C) -> C {
    (a.0 + b.0, a.1 + b.1)
}

pub fn sub(a: C, b: C) -> C {
    (a.0 - b.0, a.1 - b.1)
}

pub fn mul(a: C, b: C) -> C {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

pub fn conj(a: C) -> C {
    (a.0, -a.1)
}

pub fn div(a: C, b: C) -> C {
    let d = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
}

pub fn abs(a: C) -> f64 {
    a.0.hypot(a.1)
}

pub fn abs2(a: C) -> f64 {
    a.0 * a.0 + a.1 * a.1
}

/// Withdrawal current `conj(S / V)`.
pub fn withdrawal_current(s: C, v: C) -> C {
    conj(div(s, v))
}

/// Exact solution of the single-branch feeder, from the quadratic satisfied
/// by the squared voltage magnitude `v = |V1|^2`:
///
/// `v^2 + (2a - v0^2) v + (a^2 + b^2) = 0`, `a = rP + xQ`, `b = xP - rQ`.
///
/// Returns the high-voltage root, or `None` when no real solution exists
/// (the load is undeliverable).
pub struct TwoBusSolution {
    pub phasor: C,
    pub v_mag: f64,
    /// Series loss `r |S|^2 / |V1|^2`.
    pub loss: f64,
}

pub fn two_bus_exact(r: f64, x: f64, p: f64, q: f64, v0: f64) -> Option<TwoBusSolution> {
    let a = r * p + x * q;
    let b = x * p - r * q;
    let lin = 2.0 * a - v0 * v0;
    let disc = lin * lin - 4.0 * (a * a + b * b);
    if disc < 0.0 {
        return None;
    }
    let v = (-lin + disc.sqrt()) / 2.0;
    if v <= 0.0 {
        return None;
    }
    Some(TwoBusSolution {
        phasor: ((v + a) / v0, -b / v0),
        v_mag: v.sqrt(),
        loss: r * (p * p + q * q) / v,
    })
}

/// Branch currents obtained by dense Gaussian elimination on the Kirchhoff
/// current-balance equations (one per non-slack bus):
///
/// `I_branch[k] - sum_{c child of k} I_branch[c] = I_nodal[k]`
///
/// This is an entirely different computation path from the reverse
/// topological accumulation used by the solver.
pub fn dense_kcl_branch_currents(feeder: &RadialFeeder, nodal: &[C]) -> Vec<C> {
    let slack = feeder.slack_id();
    let unknowns: Vec<u32> = feeder
        .buses()
        .iter()
        .filter(|b| b.id != slack)
        .map(|b| b.id)
        .collect();
    let col_of = |id: u32| unknowns.iter().position(|&u| u == id).expect("non-slack");
    let n = unknowns.len();

    let mut a = vec![vec![(0.0, 0.0); n]; n];
    let mut rhs = vec![(0.0, 0.0); n];
    for (row, &k) in unknowns.iter().enumerate() {
        a[row][col_of(k)] = (1.0, 0.0);
        for &c in feeder.children(k) {
            a[row][col_of(c)] = (-1.0, 0.0);
        }
        rhs[row] = nodal[k as usize];
    }

    // Gaussian elimination with partial pivoting on raw tuples.
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| abs(a[i][col]).total_cmp(&abs(a[j][col])))
            .expect("nonempty");
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        assert!(abs(a[col][col]) > 0.0, "singular KCL system");
        for row in col + 1..n {
            if abs(a[row][col]) == 0.0 {
                continue;
            }
            let factor = div(a[row][col], a[col][col]);
            let (pivot_rows, elim_rows) = a.split_at_mut(row);
            let pivot = &pivot_rows[col][col..];
            let target = &mut elim_rows[0][col..];
            for (t, &p) in target.iter_mut().zip(pivot) {
                *t = sub(*t, mul(factor, p));
            }
            let delta = mul(factor, rhs[col]);
            rhs[row] = sub(rhs[row], delta);
        }
    }
    let mut x = vec![(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc = sub(acc, mul(a[row][k], x[k]));
        }
        x[row] = div(acc, a[row][row]);
    }

    let mut branch = vec![(0.0, 0.0); feeder.n_buses()];
    for (i, &id) in unknowns.iter().enumerate() {
        branch[id as usize] = x[i];
    }
    branch
}

/// Series loss of the canonical two-branch chain recomputed from raw currents
/// built at the given voltage magnitudes (phases aligned), as the formula
/// text describes: the leaf current crosses both branches.
pub fn chain_loss_reference(
    r: f64,
    c_leaf: f64,
    w_leaf: f64,
    c_up: f64,
    w_up: f64,
    v_leaf: f64,
    v_up: f64,
) -> f64 {
    let i_leaf = (c_leaf / v_leaf, -w_leaf / v_leaf);
    let i_up = (c_up / v_up, -w_up / v_up);
    let upper = add(i_leaf, i_up);
    r * (abs2(upper) + abs2(i_leaf))
}

/// Power-balance residual `|sum r |I|^2 - (P_slack + sum(p_gen - p_load))|`
/// recomputed independently: withdrawal currents from bus data and solved
/// voltages, branch currents by walking every bus's ancestor path, slack
/// power from the slack's child branches.
pub fn conservation_residual(
    feeder: &RadialFeeder,
    profile: &SetpointProfile,
    voltages: &[Complex64],
) -> f64 {
    let slack = feeder.slack_id();
    let mut branch: Vec<C> = vec![(0.0, 0.0); feeder.n_buses()];
    let mut net_p = 0.0;
    for bus in feeder.buses() {
        if bus.parent.is_none() {
            continue;
        }
        let s: C = (
            bus.p_load - bus.p_gen,
            bus.q_load - profile.q_gen(bus.id),
        );
        let v = voltages[bus.id as usize];
        let i = withdrawal_current(s, (v.re, v.im));
        let mut k = bus.id;
        while k != slack {
            branch[k as usize] = add(branch[k as usize], i);
            k = feeder.bus(k).parent.expect("non-slack bus");
        }
        net_p += bus.p_gen - bus.p_load;
    }

    let losses: f64 = feeder
        .buses()
        .iter()
        .filter(|b| b.parent.is_some())
        .map(|b| b.branch_r * abs2(branch[b.id as usize]))
        .sum();

    let into_slack_children = feeder
        .children(slack)
        .iter()
        .fold((0.0, 0.0), |acc, &c| add(acc, branch[c as usize]));
    let v0 = feeder.slack_voltage();
    let slack_p = mul((v0.re, v0.im), conj(into_slack_children)).0;

    (losses - (slack_p + net_p)).abs()
}

/// Asserts loss-accounting conservation at 1e-8 on a converged state.
pub fn assert_conserved(feeder: &RadialFeeder, profile: &SetpointProfile, state: &SolvedState) {
    let residual = conservation_residual(feeder, profile, &state.voltages);
    assert!(
        residual <= 1e-8,
        "conservation violated: residual {residual:e}"
    );
}

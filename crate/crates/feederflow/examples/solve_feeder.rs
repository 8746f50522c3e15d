//! Parse a feeder file, solve its power flow, and print the operating point.
//!
//! ```text
//! cargo run --example solve_feeder
//! ```

use std::path::Path;

use feederflow::control::{apply_heuristic, apply_no_action};
use feederflow::io::read_feeder;
use feederflow::powerflow::{slack_power, solve, SolverConfig};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/mixed_feeder.toml");
    let doc = read_feeder(&path).expect("bundled feeder parses");
    let feeder = &doc.feeder;
    println!("feeder: {}", path.display());
    println!(
        "buses: {} (slack {}), controllable: {:?}",
        feeder.n_buses(),
        feeder.slack_id(),
        feeder.controllable_buses()
    );

    let config = SolverConfig::default();
    let profile = apply_heuristic(feeder);
    let state = solve(feeder, &profile, &config).expect("power flow converges");

    println!(
        "\nconverged in {} iterations (residual {:.2e})",
        state.iterations, state.residual
    );
    println!("\n  bus   |V| (pu)     angle (rad)   q_gen (pu)   |I_branch| (pu)");
    for bus in feeder.buses() {
        let id = bus.id;
        if bus.parent.is_none() {
            println!(
                "  {:>3}   {:<10.6}   {:>11.3e}   {:>10}   {:>15}",
                id,
                state.voltage_magnitude(id),
                state.voltage_angle(id),
                "-",
                "-"
            );
        } else {
            println!(
                "  {:>3}   {:<10.6}   {:>11.3e}   {:>10.6}   {:>15.6}",
                id,
                state.voltage_magnitude(id),
                state.voltage_angle(id),
                profile.q_gen(id),
                state.branch_currents[id as usize].norm()
            );
        }
    }

    let slack = slack_power(feeder, &state);
    println!("\ntotal series loss: {:.6e} pu", state.total_loss);
    println!("slack injection:   {:.6} + j{:.6} pu", slack.re, slack.im);

    // The solution balances: slack power + net bus injections = losses.
    let net_load: f64 = feeder
        .buses()
        .iter()
        .filter(|b| b.parent.is_some())
        .map(|b| b.p_load - b.p_gen)
        .sum();
    println!(
        "power balance:     slack P - net load P = {:.3e} (equals the loss)",
        slack.re - net_load
    );

    // No-action comparison for context.
    let baseline = apply_no_action(feeder, &Default::default()).expect("zero baseline is valid");
    let base_state = solve(feeder, &baseline, &config).expect("power flow converges");
    println!(
        "\nfor contrast, the no-action loss is {:.6e} pu ({:.2}% higher)",
        base_state.total_loss,
        (base_state.total_loss / state.total_loss - 1.0) * 100.0
    );
}

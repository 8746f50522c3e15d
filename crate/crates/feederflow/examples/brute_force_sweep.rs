//! Exhaustively grid-search the constant setpoints of a feeder and compare
//! the optimum against the local load-tracking heuristic.
//!
//! ```text
//! cargo run --example brute_force_sweep
//! ```

use std::path::Path;

use feederflow::analysis::brute_force_best;
use feederflow::control::{apply_heuristic, apply_no_action};
use feederflow::io::read_feeder;
use feederflow::powerflow::{solve, SolverConfig};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/mixed_feeder.toml");
    let doc = read_feeder(&path).expect("bundled feeder parses");
    let feeder = &doc.feeder;
    let config = SolverConfig::default();

    let grid = 11;
    let controllable = feeder.controllable_buses();
    println!(
        "feeder: {} ({} controllable buses, {} grid points each -> {} combinations)",
        path.display(),
        controllable.len(),
        grid,
        (grid as u64).pow(controllable.len() as u32)
    );

    let sweep = brute_force_best(feeder, grid, &config).expect("sweep fits the size limits");
    println!(
        "evaluated {} combinations ({} diverged)\n",
        sweep.evaluated, sweep.skipped
    );

    let tracking = apply_heuristic(feeder);
    let heur = solve(feeder, &tracking, &config).expect("converges");
    let baseline = apply_no_action(feeder, &Default::default()).expect("zero baseline is valid");
    let base = solve(feeder, &baseline, &config).expect("converges");

    println!("  bus   q_max     best grid q_gen   heuristic q_gen");
    for (id, q_gen) in sweep.best.entries() {
        println!(
            "  {:>3}   {:<7.4}   {:<15.4}   {:<15.4}",
            id,
            feeder.bus(id).q_max,
            q_gen,
            tracking.q_gen(id)
        );
    }

    println!("\n  no-action loss: {:.9e} pu", base.total_loss);
    println!("  heuristic loss: {:.9e} pu", heur.total_loss);
    println!("  best grid loss: {:.9e} pu", sweep.loss);
    println!(
        "  heuristic gap:  {:.3e} pu ({:.4}% above the grid optimum)",
        heur.total_loss - sweep.loss,
        (heur.total_loss / sweep.loss - 1.0) * 100.0
    );
}

//! Compare series losses under no action and under the local load-tracking
//! policy, across the bundled feeders and a batch of random ones.
//!
//! ```text
//! cargo run --example compare_policies
//! ```

use std::path::Path;

use feederflow::analysis::{random_feeder, RandomFeederSpec};
use feederflow::control::{apply_heuristic, apply_no_action};
use feederflow::feeder::RadialFeeder;
use feederflow::io::read_feeder;
use feederflow::powerflow::{solve, SolverConfig};

fn compare(name: &str, feeder: &RadialFeeder) -> (f64, f64) {
    let config = SolverConfig::default();
    let baseline = apply_no_action(feeder, &Default::default()).expect("zero baseline is valid");
    let tracking = apply_heuristic(feeder);
    let base = solve(feeder, &baseline, &config).expect("converges");
    let heur = solve(feeder, &tracking, &config).expect("converges");
    let reduction = if base.total_loss > 0.0 {
        (base.total_loss - heur.total_loss) / base.total_loss * 100.0
    } else {
        0.0
    };
    println!(
        "  {:<28} {:>12.6e} {:>12.6e} {:>9.3}%",
        name, base.total_loss, heur.total_loss, reduction
    );
    (base.total_loss, heur.total_loss)
}

fn main() {
    println!("series loss by policy (pu):");
    println!(
        "  {:<28} {:>12} {:>12} {:>10}",
        "feeder", "no action", "heuristic", "reduction"
    );

    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    for file in ["two_bus.toml", "three_bus.toml", "mixed_feeder.toml"] {
        let doc = read_feeder(&data.join(file)).expect("bundled feeder parses");
        compare(file, &doc.feeder);
    }

    // A batch of random feeders: the heuristic never loses to no action.
    let spec = RandomFeederSpec::default();
    let mut worst_gain = f64::INFINITY;
    let mut violations = 0usize;
    let n = 200;
    for seed in 0..n {
        let feeder = random_feeder(seed, &spec);
        if feeder.controllable_buses().is_empty() {
            continue;
        }
        let name = format!("random seed {seed}");
        let (base, heur) = if seed < 3 {
            compare(&name, &feeder)
        } else {
            let config = SolverConfig::default();
            let b = solve(&feeder, &apply_no_action(&feeder, &Default::default()).unwrap(), &config)
                .expect("converges");
            let h = solve(&feeder, &apply_heuristic(&feeder), &config).expect("converges");
            (b.total_loss, h.total_loss)
        };
        worst_gain = worst_gain.min(base - heur);
        if heur > base {
            violations += 1;
        }
    }
    println!("\nacross {n} random feeders:");
    println!("  smallest loss reduction: {worst_gain:.3e} pu");
    println!("  orderings violated:      {violations}");
}

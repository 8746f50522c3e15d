//! Raising any bus's reactive setpoint never drops any voltage on the
//! feeder. This example walks one bus's setpoint from 0 to q_max and prints
//! the resulting voltage profile at every step.
//!
//! ```text
//! cargo run --example voltage_response
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use feederflow::feeder::SetpointProfile;
use feederflow::io::read_feeder;
use feederflow::powerflow::{solve, SolverConfig};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/mixed_feeder.toml");
    let doc = read_feeder(&path).expect("bundled feeder parses");
    let feeder = &doc.feeder;
    let config = SolverConfig::default();

    // Walk the setpoint of the deepest controllable bus; hold the rest at 0.
    let bus = *feeder
        .controllable_buses()
        .last()
        .expect("feeder has an inverter");
    let q_max = feeder.bus(bus).q_max;
    println!("walking q_gen at bus {bus} from 0 to q_max = {q_max}\n");

    print!("  q_gen    ");
    for b in feeder.buses() {
        print!("  |V{}|      ", b.id);
    }
    println!();

    let steps = 6;
    let mut previous: Option<Vec<f64>> = None;
    for step in 0..=steps {
        let q = q_max * step as f64 / steps as f64;
        let mut entries: BTreeMap<u32, f64> =
            feeder.controllable_buses().into_iter().map(|id| (id, 0.0)).collect();
        entries.insert(bus, q);
        let profile = SetpointProfile::new(feeder, entries).expect("setpoints are in range");
        let state = solve(feeder, &profile, &config).expect("converges");

        let magnitudes: Vec<f64> = feeder
            .buses()
            .iter()
            .map(|b| state.voltage_magnitude(b.id))
            .collect();
        print!("  {q:<7.4}  ");
        for v in &magnitudes {
            print!("  {v:<9.6}");
        }
        println!();

        if let Some(prev) = &previous {
            for (b, (now, before)) in magnitudes.iter().zip(prev).enumerate() {
                assert!(
                    now - before >= -1e-12,
                    "voltage at bus {b} dropped when q_gen rose"
                );
            }
        }
        previous = Some(magnitudes);
    }

    println!("\nno voltage anywhere decreased as the setpoint rose");
}

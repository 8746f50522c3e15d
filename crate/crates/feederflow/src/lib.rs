//! Radial distribution-feeder power flow, decentralized inverter var control,
//! and numeric certification of the loss orderings that justify the control.
//!
//! The crate models a radial feeder (a tree of buses hanging off one slack
//! bus), solves its power flow with a backward-forward sweep, applies the
//! local load-tracking policy `q_gen = min(q_load, q_max)` at inverter buses,
//! and certifies — on exactly solved operating points — the strict loss and
//! voltage orderings that make the policy sound.
//!
//! Modules:
//! - [`feeder`]: feeder topology, validation, node classes, setpoint profiles.
//! - [`powerflow`]: the backward-forward sweep solver and its building blocks.
//! - [`control`]: setpoint policies (no action, load tracking, fixed).
//! - [`analysis`]: canonical two-load cases, the closed-form loss, ordering
//!   certification, brute-force setpoint sweeps, and seeded generators.
//! - [`io`]: the TOML feeder-file format (parse and exact re-emit).
//! - [`report`]: line-oriented reports and JSON output documents.
//! - [`cli`]: the command implementations behind the `feederflow` binary.
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! cargo run --example solve_feeder        # parse + solve + report a feeder file
//! cargo run --example compare_policies    # no-action vs load-tracking losses
//! cargo run --example certify_orderings   # certify all orderings on seeded cases
//! cargo run --example dominance_chain     # the three equivalent leaf-term forms
//! cargo run --example brute_force_sweep   # exhaustive grid vs the heuristic
//! cargo run --example voltage_response    # voltage rise under saturation
//! cargo run --example two_bus_closed_form # closed form vs exact solver losses
//! ```

pub mod analysis;
pub mod cli;
pub mod control;
pub mod feeder;
pub mod io;
pub mod powerflow;
pub mod report;

pub use analysis::{
    brute_force_best, build_canonical_feeder, certify_case, check_first_component_dominance,
    closed_form_loss, random_case, random_feeder, AnalysisError, CaseKind, CaseVerdict, ClassSpec,
    Mode, NodeCase, NodeRole, RandomFeederSpec, SweepResult, TwoBusCase, ALL_CASE_KINDS,
};
pub use control::{apply_heuristic, apply_no_action, apply_policy, ControlError, Policy};
pub use feeder::{
    classify_node, Bus, FeederError, NodeClass, RadialFeeder, SetpointError, SetpointProfile,
};
pub use io::{parse_feeder_str, read_feeder, write_feeder, write_feeder_str, FeederDocument, ParseError};
pub use powerflow::{solve, slack_power, SolveError, SolvedState, SolverConfig};

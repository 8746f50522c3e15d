//! Command implementations behind the `feederflow` binary: flag validation,
//! report construction, and exit-code mapping.
//!
//! Exit codes:
//! - `0` success
//! - `1` unreadable or invalid feeder file
//! - `2` power flow failed to converge
//! - `3` invalid flags or flag values
//! - `4` `verify` found a violated ordering

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::analysis::{
    brute_force_best, certify_case, random_case, AnalysisError, CaseKind, CaseVerdict, Mode,
    ALL_CASE_KINDS,
};
use crate::control::{apply_heuristic, apply_no_action, ControlError};
use crate::io::{read_feeder, write_feeder, FeederDocument};
use crate::powerflow::{slack_power, solve, SolveError, SolverConfig};
use crate::report::{
    BusSolution, CompareBus, CompareDocument, Record, Report, SolveDocument, SweepDocument,
    SweepSetpoint, VerifyDocument, VerifyRecord, VerifySummary,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_FAILED_VERDICT: i32 = 4;

/// A command failure carrying its process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub exit_code: i32,
    pub message: String,
}

impl CliError {
    fn data(message: impl Into<String>) -> Self {
        CliError {
            exit_code: EXIT_DATA,
            message: message.into(),
        }
    }

    fn diverged(message: impl Into<String>) -> Self {
        CliError {
            exit_code: EXIT_DIVERGED,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        CliError {
            exit_code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

/// Successful command result: the text report for stdout plus the exit code
/// (which `verify` uses to signal violated orderings without erroring).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub report: String,
    pub exit_code: i32,
}

impl CommandOutput {
    fn ok(report: String) -> Self {
        CommandOutput {
            report,
            exit_code: EXIT_OK,
        }
    }
}

/// Reactive policy selectable on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyChoice {
    NoAction,
    Heuristic,
}

impl PolicyChoice {
    pub fn token(self) -> &'static str {
        match self {
            PolicyChoice::NoAction => "none",
            PolicyChoice::Heuristic => "heuristic",
        }
    }
}

/// Parses `--policy`; unknown values are usage errors.
pub fn parse_policy(text: &str) -> Result<PolicyChoice, CliError> {
    match text {
        "none" => Ok(PolicyChoice::NoAction),
        "heuristic" => Ok(PolicyChoice::Heuristic),
        other => Err(CliError::usage(format!(
            "unknown policy `{other}` (expected `none` or `heuristic`)"
        ))),
    }
}

/// Loss-evaluation modes selectable on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeChoice {
    Closed,
    Exact,
    Both,
}

impl ModeChoice {
    fn modes(self) -> &'static [Mode] {
        match self {
            ModeChoice::Closed => &[Mode::ClosedForm],
            ModeChoice::Exact => &[Mode::ExactPowerFlow],
            ModeChoice::Both => &[Mode::ClosedForm, Mode::ExactPowerFlow],
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            ModeChoice::Closed => "closed",
            ModeChoice::Exact => "exact",
            ModeChoice::Both => "both",
        }
    }
}

/// Parses `--mode`; unknown values are usage errors.
pub fn parse_mode(text: &str) -> Result<ModeChoice, CliError> {
    match text {
        "closed" => Ok(ModeChoice::Closed),
        "exact" => Ok(ModeChoice::Exact),
        "both" => Ok(ModeChoice::Both),
        other => Err(CliError::usage(format!(
            "unknown mode `{other}` (expected `closed`, `exact`, or `both`)"
        ))),
    }
}

/// Parses `--cases`: `all` or a comma-separated list of case tokens.
pub fn parse_cases(text: &str) -> Result<Vec<CaseKind>, CliError> {
    if text == "all" {
        return Ok(ALL_CASE_KINDS.to_vec());
    }
    let mut kinds = Vec::new();
    for token in text.split(',') {
        let token = token.trim();
        let kind = CaseKind::from_token(token).ok_or_else(|| {
            let known = ALL_CASE_KINDS
                .iter()
                .map(|k| k.token())
                .collect::<Vec<_>>()
                .join(", ");
            CliError::usage(format!("unknown case `{token}` (expected `all` or any of: {known})"))
        })?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        return Err(CliError::usage("no cases selected"));
    }
    Ok(kinds)
}

fn validated_tolerance(tolerance: f64) -> Result<SolverConfig, CliError> {
    if !tolerance.is_finite() || tolerance <= 0.0 {
        return Err(CliError::usage(format!(
            "tolerance must be positive and finite, got {tolerance}"
        )));
    }
    Ok(SolverConfig {
        tolerance,
        ..SolverConfig::default()
    })
}

fn load_document(path: &Path) -> Result<FeederDocument, CliError> {
    read_feeder(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn solve_or_exit(
    doc: &FeederDocument,
    profile: &crate::feeder::SetpointProfile,
    config: &SolverConfig,
    what: &str,
) -> Result<crate::powerflow::SolvedState, CliError> {
    solve(&doc.feeder, profile, config).map_err(|e| match e {
        SolveError::Diverged { .. } | SolveError::ZeroVoltage => {
            CliError::diverged(format!("{what}: {e}"))
        }
        SolveError::Setpoint(e) => CliError::data(format!("{what}: {e}")),
    })
}

fn write_output<T: serde::Serialize>(path: &Path, document: &T) -> Result<(), CliError> {
    let mut json =
        serde_json::to_string_pretty(document).expect("report documents always serialize");
    json.push('\n');
    std::fs::write(path, json)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

/// `solve` command arguments.
#[derive(Debug, Clone)]
pub struct SolveArgs {
    pub feeder: PathBuf,
    pub policy: PolicyChoice,
    pub tolerance: f64,
    pub output: Option<PathBuf>,
    pub echo: Option<PathBuf>,
}

/// Solves one feeder file under the chosen policy and reports the operating
/// point: per-bus voltage and setpoint, total loss, and slack power.
pub fn cmd_solve(args: &SolveArgs) -> Result<CommandOutput, CliError> {
    let config = validated_tolerance(args.tolerance)?;
    let doc = load_document(&args.feeder)?;
    if let Some(echo) = &args.echo {
        write_feeder(echo, &doc)
            .map_err(|e| CliError::data(format!("cannot write echo file: {e}")))?;
    }

    let profile = match args.policy {
        PolicyChoice::NoAction => apply_no_action(&doc.feeder, &BTreeMap::new())
            .map_err(|ControlError::Setpoint(e)| CliError::data(e.to_string()))?,
        PolicyChoice::Heuristic => apply_heuristic(&doc.feeder),
    };
    let state = solve_or_exit(&doc, &profile, &config, "solve")?;
    let slack = slack_power(&doc.feeder, &state);

    let mut report = Report::new();
    report.line("# angle convention: v_angle_rad = -arg(V), radians; positive lags the slack");
    report.push(
        Record::new("meta")
            .field("command", "solve")
            .field("feeder", args.feeder.display().to_string())
            .field("policy", args.policy.token())
            .float("tolerance", config.tolerance),
    );
    report.push(
        Record::new("convergence")
            .integer("iterations", state.iterations as u64)
            .float("residual", state.residual),
    );

    let mut buses = Vec::new();
    for bus in doc.feeder.buses() {
        let id = bus.id;
        let mut record = Record::new("bus")
            .integer("id", id as u64)
            .float("v_mag", state.voltage_magnitude(id))
            .float("v_angle_rad", state.voltage_angle(id));
        let mut row = BusSolution {
            id,
            v_mag: state.voltage_magnitude(id),
            v_angle_rad: state.voltage_angle(id),
            q_gen: None,
            branch_current_mag: None,
        };
        if bus.parent.is_some() {
            let q_gen = profile.q_gen(id);
            let current = state.branch_currents[id as usize].norm();
            record = record.float("q_gen", q_gen).float("branch_current_mag", current);
            row.q_gen = Some(q_gen);
            row.branch_current_mag = Some(current);
        }
        report.push(record);
        buses.push(row);
    }

    report.push(Record::new("loss").float("total", state.total_loss));
    report.push(
        Record::new("slack")
            .float("p", slack.re)
            .float("q", slack.im),
    );

    if let Some(path) = &args.output {
        let document = SolveDocument {
            feeder: args.feeder.display().to_string(),
            policy: args.policy.token().into(),
            tolerance: config.tolerance,
            iterations: state.iterations,
            residual: state.residual,
            total_loss: state.total_loss,
            slack_p: slack.re,
            slack_q: slack.im,
            buses,
        };
        write_output(path, &document)?;
    }
    Ok(CommandOutput::ok(report.render()))
}

/// `compare` command arguments.
#[derive(Debug, Clone)]
pub struct CompareArgs {
    pub feeder: PathBuf,
    pub tolerance: f64,
    pub output: Option<PathBuf>,
}

/// Solves one feeder under no action and under load tracking and reports both
/// losses, the relative reduction, and whether the expected ordering held.
pub fn cmd_compare(args: &CompareArgs) -> Result<CommandOutput, CliError> {
    let config = validated_tolerance(args.tolerance)?;
    let doc = load_document(&args.feeder)?;

    let baseline = apply_no_action(&doc.feeder, &BTreeMap::new())
        .map_err(|ControlError::Setpoint(e)| CliError::data(e.to_string()))?;
    let tracking = apply_heuristic(&doc.feeder);
    let base_state = solve_or_exit(&doc, &baseline, &config, "no-action solve")?;
    let heur_state = solve_or_exit(&doc, &tracking, &config, "heuristic solve")?;

    let no_action_loss = base_state.total_loss;
    let heuristic_loss = heur_state.total_loss;
    let reduction_percent = if no_action_loss > 0.0 {
        (no_action_loss - heuristic_loss) / no_action_loss * 100.0
    } else {
        0.0
    };
    let ordering_violated = heuristic_loss > no_action_loss;

    let mut report = Report::new();
    report.push(
        Record::new("meta")
            .field("command", "compare")
            .field("feeder", args.feeder.display().to_string())
            .float("tolerance", config.tolerance),
    );
    report.push(
        Record::new("policy")
            .field("name", "none")
            .float("loss", no_action_loss)
            .integer("iterations", base_state.iterations as u64),
    );
    report.push(
        Record::new("policy")
            .field("name", "heuristic")
            .float("loss", heuristic_loss)
            .integer("iterations", heur_state.iterations as u64),
    );

    let controllable = doc.feeder.controllable_buses();
    if controllable.is_empty() {
        report.line("note: no controllable buses; policies coincide");
    }
    let mut buses = Vec::new();
    for id in controllable {
        report.push(
            Record::new("setpoint")
                .integer("bus", id as u64)
                .float("none", baseline.q_gen(id))
                .float("heuristic", tracking.q_gen(id)),
        );
        buses.push(CompareBus {
            id,
            q_gen_no_action: baseline.q_gen(id),
            q_gen_heuristic: tracking.q_gen(id),
        });
    }

    report.push(
        Record::new("comparison")
            .float("reduction_percent", reduction_percent)
            .boolean("ordering_violated", ordering_violated),
    );
    if ordering_violated {
        report.line(format!(
            "WARNING: ordering violated: heuristic loss {} exceeds no-action loss {}",
            crate::report::float_field(heuristic_loss),
            crate::report::float_field(no_action_loss),
        ));
    }

    if let Some(path) = &args.output {
        let document = CompareDocument {
            feeder: args.feeder.display().to_string(),
            tolerance: config.tolerance,
            no_action_loss,
            heuristic_loss,
            reduction_percent,
            ordering_violated,
            buses,
        };
        write_output(path, &document)?;
    }
    Ok(CommandOutput::ok(report.render()))
}

/// `verify` command arguments.
#[derive(Debug, Clone)]
pub struct VerifyArgs {
    pub cases: Vec<CaseKind>,
    pub trials: u32,
    pub seed: u64,
    pub mode: ModeChoice,
    pub output: Option<PathBuf>,
}

/// SplitMix64 step: the standard 64-bit finalizer, stable across platforms
/// and releases (unlike the std hasher).
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Per-trial seed: depends on the master seed, the case kind's stable
/// ordinal, and the trial index, so `--cases both-sender` replays exactly the
/// trials that `--cases all` runs for that kind.
pub fn trial_seed(master: u64, kind: CaseKind, trial: u32) -> u64 {
    let ordinal = ALL_CASE_KINDS
        .iter()
        .position(|&k| k == kind)
        .expect("kind is enumerated") as u64;
    splitmix64(master ^ splitmix64(ordinal ^ splitmix64(trial as u64)))
}

/// Certifies the selected orderings over seeded random trials. Any violated
/// trial flips the exit code to [`EXIT_FAILED_VERDICT`]; the report always
/// carries every record so a failure can be replayed from its seed.
pub fn cmd_verify(args: &VerifyArgs) -> Result<CommandOutput, CliError> {
    if args.trials == 0 {
        return Err(CliError::usage("trials must be at least 1"));
    }
    let modes = args.mode.modes();

    let mut report = Report::new();
    let case_list = args
        .cases
        .iter()
        .map(|k| k.token())
        .collect::<Vec<_>>()
        .join(",");
    report.push(
        Record::new("meta")
            .field("command", "verify")
            .field("cases", case_list)
            .integer("trials", args.trials as u64)
            .integer("seed", args.seed)
            .field("mode", args.mode.token()),
    );

    let mut records = Vec::new();
    let mut summaries = Vec::new();
    let mut total_passed = 0u32;
    let mut total_failed = 0u32;

    for &kind in &args.cases {
        for &mode in modes {
            let mut passed = 0u32;
            for trial in 0..args.trials {
                let seed = trial_seed(args.seed, kind, trial);
                let case = random_case(seed, kind.class_spec());
                let verdict = certify_case(&case, kind, mode).map_err(|e| {
                    CliError::diverged(format!(
                        "case {} mode {} trial {trial} seed {seed}: {e}",
                        kind.token(),
                        mode.token()
                    ))
                })?;
                record_trial(&mut report, &mut records, trial, seed, &verdict);
                if verdict.holds {
                    passed += 1;
                }
            }
            let failed = args.trials - passed;
            total_passed += passed;
            total_failed += failed;
            report.push(
                Record::new("summary")
                    .field("case", kind.token())
                    .field("mode", mode.token())
                    .integer("trials", args.trials as u64)
                    .integer("passed", passed as u64)
                    .integer("failed", failed as u64),
            );
            summaries.push(VerifySummary {
                case: kind.token().into(),
                mode: mode.token().into(),
                trials: args.trials,
                passed,
                failed,
            });
        }
    }

    report.push(
        Record::new("total")
            .integer("cases", args.cases.len() as u64)
            .integer("modes", modes.len() as u64)
            .integer("passed", total_passed as u64)
            .integer("failed", total_failed as u64),
    );

    if let Some(path) = &args.output {
        let document = VerifyDocument {
            seed: args.seed,
            trials: args.trials,
            records,
            summaries,
            total_passed,
            total_failed,
        };
        write_output(path, &document)?;
    }

    Ok(CommandOutput {
        report: report.render(),
        exit_code: exit_for_failures(total_failed),
    })
}

/// Exit code for a completed verification run.
pub fn exit_for_failures(failed: u32) -> i32 {
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_FAILED_VERDICT
    }
}

fn record_trial(
    report: &mut Report,
    records: &mut Vec<VerifyRecord>,
    trial: u32,
    seed: u64,
    verdict: &CaseVerdict,
) {
    report.push(
        Record::new("trial")
            .field("case", verdict.kind.token())
            .field("mode", verdict.mode.token())
            .integer("trial", trial as u64)
            .integer("seed", seed)
            .float("loss_left", verdict.left)
            .float("loss_right", verdict.right)
            .float("margin", verdict.margin)
            .boolean("holds", verdict.holds)
            .integer("iters_left", verdict.iterations.0 as u64)
            .integer("iters_right", verdict.iterations.1 as u64),
    );
    records.push(VerifyRecord {
        case: verdict.kind.token().into(),
        mode: verdict.mode.token().into(),
        trial,
        seed,
        loss_left: verdict.left,
        loss_right: verdict.right,
        margin: verdict.margin,
        holds: verdict.holds,
        iterations_left: verdict.iterations.0 as u64,
        iterations_right: verdict.iterations.1 as u64,
    });
}

/// `sweep` command arguments.
#[derive(Debug, Clone)]
pub struct SweepArgs {
    pub feeder: PathBuf,
    pub grid: usize,
    pub output: Option<PathBuf>,
}

/// Brute-forces the loss-minimizing constant setpoints on a uniform per-bus
/// grid and reports how close the load-tracking heuristic comes.
pub fn cmd_sweep(args: &SweepArgs) -> Result<CommandOutput, CliError> {
    let config = SolverConfig::default();
    let doc = load_document(&args.feeder)?;

    let sweep = brute_force_best(&doc.feeder, args.grid, &config).map_err(|e| match e {
        AnalysisError::InvalidGrid { .. } | AnalysisError::TooLarge { .. } => {
            CliError::usage(e.to_string())
        }
        AnalysisError::AllDiverged { .. } => CliError::diverged(e.to_string()),
        other => CliError::data(other.to_string()),
    })?;

    let baseline = apply_no_action(&doc.feeder, &BTreeMap::new())
        .map_err(|ControlError::Setpoint(e)| CliError::data(e.to_string()))?;
    let tracking = apply_heuristic(&doc.feeder);
    let base_state = solve_or_exit(&doc, &baseline, &config, "no-action solve")?;
    let heur_state = solve_or_exit(&doc, &tracking, &config, "heuristic solve")?;
    let heuristic_gap = heur_state.total_loss - sweep.loss;

    let controllable = doc.feeder.controllable_buses();
    let mut report = Report::new();
    report.push(
        Record::new("meta")
            .field("command", "sweep")
            .field("feeder", args.feeder.display().to_string())
            .integer("grid", args.grid as u64),
    );
    report.push(
        Record::new("space")
            .integer("controllable", controllable.len() as u64)
            .integer("evaluated", sweep.evaluated)
            .integer("skipped", sweep.skipped),
    );
    report.push(Record::new("best").float("loss", sweep.loss));
    let mut best_setpoints = Vec::new();
    for (id, q_gen) in sweep.best.entries() {
        report.push(
            Record::new("setpoint")
                .integer("bus", id as u64)
                .float("q_gen", q_gen),
        );
        best_setpoints.push(SweepSetpoint { id, q_gen });
    }
    report.push(
        Record::new("policy")
            .field("name", "heuristic")
            .float("loss", heur_state.total_loss)
            .float("gap", heuristic_gap),
    );
    report.push(
        Record::new("policy")
            .field("name", "none")
            .float("loss", base_state.total_loss),
    );

    if let Some(path) = &args.output {
        let document = SweepDocument {
            feeder: args.feeder.display().to_string(),
            grid: args.grid,
            controllable_buses: controllable.len(),
            evaluated: sweep.evaluated,
            skipped: sweep.skipped,
            best_loss: sweep.loss,
            best_setpoints,
            heuristic_loss: heur_state.total_loss,
            no_action_loss: base_state.total_loss,
            heuristic_gap,
        };
        write_output(path, &document)?;
    }
    Ok(CommandOutput::ok(report.render()))
}

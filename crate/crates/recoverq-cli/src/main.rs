//! Command-line front end: state generation and ingestion, recoverability
//! measures, proof-system simulation, the fidelity decision gate, and
//! deterministic report emission.
//!
//! Exit codes: 0 on successful computation regardless of verdict, 2 on
//! validation failures (bad files, bad flags, unphysical states), 3 when a
//! solver fails to converge.

mod report;
mod statefile;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use recoverq::linalg::herm_eigen;
use recoverq::measures::{
    chain_report, closure_suite, decide, multi_copy, MeasureOptions, RecoveryOutcome,
    RecoveryProblem,
};
use recoverq::states::cqmi;
use recoverq::{fixtures, qip, CVec, LabeledState, PureState, SystemLayout};

use report::{emit, matrix_value, num, Report};
use statefile::{Metadata, StateFile};

/// An error that already knows its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    /// A command-line or input-file problem (exit 2).
    pub fn invalid(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    /// A library error raised while validating inputs (exit 2).
    pub fn validation(e: recoverq::Error) -> Self {
        CliError {
            code: 2,
            message: e.to_string(),
        }
    }

    /// A library error raised while solving: non-convergence exits 3,
    /// anything else is an input problem (exit 2).
    pub fn solver(e: recoverq::Error) -> Self {
        let code = match e {
            recoverq::Error::Convergence(_) => 3,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "recoverq",
    version,
    about = "Recoverability measures and interactive-proof simulations for tripartite states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// State file (JSON density matrix) the command operates on
    #[arg(long, global = true, value_name = "FILE")]
    state: Option<PathBuf>,

    /// Seed for every randomized component
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    /// Solver tolerance; for `decide` this is the promise-gap tolerance
    #[arg(long, global = true, value_name = "REAL")]
    tol: Option<f64>,

    /// Write the report (or generated state) here instead of stdout;
    /// sweep commands also write a CSV sibling next to it
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Include optimizer witness matrices in the report
    #[arg(long, global = true)]
    witness: bool,

    /// Include wall-clock timings (opt-in: they break byte determinism)
    #[arg(long, global = true)]
    timings: bool,

    /// Group assignment, e.g. "A;B;C1,C2" (three groups) or "A;B;C;D"
    /// (four); by default labels are grouped by their first character
    #[arg(long, global = true, value_name = "SPEC")]
    groups: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a canonical fixture as a state file
    Gen {
        /// Fixture family
        #[arg(long, value_enum)]
        kind: Kind,
        /// Expected subsystem dimensions, e.g. "2,2,2" (validated against
        /// what the kind produces)
        #[arg(long, value_name = "D,D,..")]
        dims: Option<String>,
    },
    /// Conditional mutual information I(A;B|C) in bits
    Cqmi,
    /// Fidelity of recovery F(A;B|C)
    For,
    /// Relative entropy of recovery D(A;B|C) in bits
    Ror,
    /// Hypothesis-testing recovery over the (copies, epsilon) grid
    Dh {
        /// Type-I error budget; repeat the flag for a sweep
        #[arg(long = "epsilon", value_name = "EPS", required = true)]
        epsilon: Vec<f64>,
        /// Evaluate 1..=N i.i.d. copies
        #[arg(long, default_value_t = 1, value_name = "N")]
        copies: usize,
    },
    /// The measure chain with finite-size inequality flags
    Chain {
        /// Hypothesis-testing budgets (default 0.1 and 0.5)
        #[arg(long = "epsilon", value_name = "EPS")]
        epsilon: Vec<f64>,
    },
    /// Closure checks of the recovered set at one and two copies
    Closure {
        /// Sampled channels per randomized check
        #[arg(long, default_value_t = 2, value_name = "N")]
        samples: usize,
    },
    /// Four-message proof system: optimize a prover or simulate one
    Qip4 {
        /// Run the alternating optimizer and cross-check it against the
        /// convex engine
        #[arg(long, conflicts_with = "strategy")]
        optimize: bool,
        /// Simulate a prover strategy loaded from a JSON file
        #[arg(long, value_name = "FILE")]
        strategy: Option<PathBuf>,
    },
    /// Two-message proof system: honest prover and random-strategy sweeps
    Qip2 {
        /// Check the honest and do-nothing provers only
        #[arg(long, conflicts_with = "sweep")]
        honest: bool,
        /// Additionally simulate N seeded random strategies
        #[arg(long, value_name = "N")]
        sweep: Option<usize>,
    },
    /// |F(A;B|C) - F(A;B|D)| on a four-party pure state
    Duality,
    /// Decide the promise problem F >= alpha vs F <= beta
    Decide {
        #[arg(long, value_name = "REAL")]
        alpha: f64,
        #[arg(long, value_name = "REAL")]
        beta: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    #[value(name = "product")]
    Product,
    #[value(name = "ghz")]
    Ghz,
    #[value(name = "markov")]
    Markov,
    #[value(name = "random_pure", alias = "random-pure")]
    RandomPure,
    #[value(name = "random_mixed", alias = "random-mixed")]
    RandomMixed,
}

struct Ctx {
    state: Option<PathBuf>,
    seed: u64,
    tol: Option<f64>,
    out: Option<PathBuf>,
    witness: bool,
    timings: bool,
    groups: Option<String>,
    opts: MeasureOptions,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut opts = MeasureOptions {
        seed: cli.seed,
        ..MeasureOptions::default()
    };
    if let Some(tol) = cli.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            eprintln!("error: --tol must be a positive real, got {tol}");
            return ExitCode::from(2);
        }
        opts.tol = tol;
    }
    let ctx = Ctx {
        state: cli.state,
        seed: cli.seed,
        tol: cli.tol,
        out: cli.out,
        witness: cli.witness,
        timings: cli.timings,
        groups: cli.groups,
        opts,
    };
    match run(cli.command, &ctx) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(command: Command, ctx: &Ctx) -> Result<u8, CliError> {
    match command {
        Command::Gen { kind, dims } => cmd_gen(ctx, kind, dims.as_deref()),
        Command::Cqmi => cmd_cqmi(ctx),
        Command::For => cmd_single_measure(ctx, Measure::Fidelity),
        Command::Ror => cmd_single_measure(ctx, Measure::RelativeEntropy),
        Command::Dh { epsilon, copies } => cmd_dh(ctx, &epsilon, copies),
        Command::Chain { epsilon } => cmd_chain(ctx, &epsilon),
        Command::Closure { samples } => cmd_closure(ctx, samples),
        Command::Qip4 { optimize, strategy } => cmd_qip4(ctx, optimize, strategy.as_deref()),
        Command::Qip2 { honest, sweep } => cmd_qip2(ctx, honest, sweep),
        Command::Duality => cmd_duality(ctx),
        Command::Decide { alpha, beta } => cmd_decide(ctx, alpha, beta),
    }
}

// ---------------------------------------------------------------------------
// shared plumbing

fn load_state(ctx: &Ctx) -> Result<(LabeledState, PathBuf), CliError> {
    let path = ctx
        .state
        .as_ref()
        .ok_or_else(|| CliError::invalid("--state <FILE> is required for this command"))?;
    let (state, _) = statefile::load(path)?;
    Ok((state, path.clone()))
}

/// Splits the state's systems into measurement groups: either from an
/// explicit `--groups "A;B;C1,C2"` spec or, by default, by the first
/// character of each label. The first three groups must be nonempty; a
/// fourth, when requested, may stay empty.
fn parse_groups(
    layout: &SystemLayout,
    spec: Option<&str>,
    count: usize,
) -> Result<Vec<Vec<String>>, CliError> {
    let groups: Vec<Vec<String>> = match spec {
        Some(s) => {
            let parts: Vec<&str> = s.split(';').collect();
            if parts.len() != count {
                return Err(CliError::invalid(format!(
                    "--groups must name {count} ';'-separated groups, got {}",
                    parts.len()
                )));
            }
            parts
                .iter()
                .map(|p| {
                    p.split(',')
                        .map(|l| l.trim().to_string())
                        .filter(|l| !l.is_empty())
                        .collect()
                })
                .collect()
        }
        None => {
            let mut groups = vec![Vec::new(); count];
            for label in layout.labels() {
                let slot = match label.chars().next().map(|c| c.to_ascii_uppercase()) {
                    Some('A') => 0,
                    Some('B') => 1,
                    Some('C') => 2,
                    Some('D') if count == 4 => 3,
                    _ => {
                        return Err(CliError::invalid(format!(
                            "cannot infer a group for system `{label}`; pass --groups"
                        )))
                    }
                };
                groups[slot].push(label.to_string());
            }
            groups
        }
    };

    let mut seen = std::collections::BTreeSet::new();
    for group in &groups {
        for label in group {
            if !layout.contains(label) {
                return Err(CliError::invalid(format!(
                    "--groups names `{label}`, which is not a system of the state"
                )));
            }
            if !seen.insert(label.clone()) {
                return Err(CliError::invalid(format!(
                    "system `{label}` appears in more than one group"
                )));
            }
        }
    }
    if seen.len() != layout.len() {
        return Err(CliError::invalid(
            "the groups must cover every system of the state",
        ));
    }
    for (group, name) in groups.iter().zip(["A", "B", "C"]) {
        if group.is_empty() {
            return Err(CliError::invalid(format!("group {name} must be nonempty")));
        }
    }
    Ok(groups)
}

fn refs(group: &[String]) -> Vec<&str> {
    group.iter().map(|s| s.as_str()).collect()
}

fn groups_value(groups: &[Vec<String>]) -> Value {
    let names = ["a", "b", "c", "d"];
    let mut map = serde_json::Map::new();
    for (group, name) in groups.iter().zip(names) {
        map.insert(name.into(), json!(group));
    }
    Value::Object(map)
}

/// Extracts the state vector of a pure density matrix (largest eigenvalue
/// must be 1 within 1e-9).
fn pure_from_state(state: &LabeledState) -> Result<PureState, CliError> {
    let eig = herm_eigen(state.matrix()).map_err(CliError::validation)?;
    let top = eig.max_value();
    if (top - 1.0).abs() > 1e-9 {
        return Err(CliError::invalid(format!(
            "this command needs a pure state; the largest eigenvalue is {top:.9}"
        )));
    }
    let n = eig.vectors.nrows();
    let column = eig.vectors.column(n - 1);
    let vector = CVec::from_iterator(n, column.iter().cloned());
    PureState::new(state.layout().clone(), vector).map_err(CliError::validation)
}

/// Loads the state, splits it into four groups, certifies purity, and merges
/// the groups into the canonical four parties of the proof systems.
fn merged_pure(ctx: &Ctx) -> Result<(PureState, PathBuf, Vec<Vec<String>>), CliError> {
    let (state, path) = load_state(ctx)?;
    let groups = parse_groups(state.layout(), ctx.groups.as_deref(), 4)?;
    let phi = pure_from_state(&state)?;
    let merged = qip::merge_four(
        &phi,
        &refs(&groups[0]),
        &refs(&groups[1]),
        &refs(&groups[2]),
        &refs(&groups[3]),
    )
    .map_err(CliError::validation)?;
    Ok((merged, path, groups))
}

fn inputs_value(path: &Path, groups: Option<&[Vec<String>]>, extra: Value) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("state".into(), json!(path.display().to_string()));
    if let Some(groups) = groups {
        map.insert("groups".into(), groups_value(groups));
    }
    if let Value::Object(extra) = extra {
        for (k, v) in extra {
            map.insert(k, v);
        }
    }
    Value::Object(map)
}

fn outcome_residuals(outcome: &RecoveryOutcome) -> Value {
    json!({
        "feasibility": num(outcome.feasibility_residual),
        "stationarity": num(outcome.stationarity_residual),
    })
}

fn finish(
    ctx: &Ctx,
    mut report: Report,
    started: Instant,
    converged: bool,
) -> Result<u8, CliError> {
    if ctx.timings {
        report.set(
            "timings",
            json!({ "seconds": num(started.elapsed().as_secs_f64()) }),
        );
    }
    emit(ctx.out.as_deref(), report.finish())?;
    Ok(if converged { 0 } else { 3 })
}

// ---------------------------------------------------------------------------
// commands

fn cmd_gen(ctx: &Ctx, kind: Kind, dims: Option<&str>) -> Result<u8, CliError> {
    let (state, name, seeded) = match kind {
        Kind::Product => (
            fixtures::product(ctx.seed).map_err(CliError::validation)?,
            "product",
            true,
        ),
        Kind::Ghz => (fixtures::ghz().map_err(CliError::validation)?, "ghz", false),
        Kind::Markov => (
            fixtures::markov(ctx.seed).map_err(CliError::validation)?,
            "markov",
            true,
        ),
        Kind::RandomPure => (
            fixtures::random_pure4(ctx.seed)
                .and_then(|phi| phi.density())
                .map_err(CliError::validation)?,
            "random_pure",
            true,
        ),
        Kind::RandomMixed => (
            fixtures::random_mixed_abc(ctx.seed).map_err(CliError::validation)?,
            "random_mixed",
            true,
        ),
    };

    if let Some(spec) = dims {
        let want: Vec<usize> = spec
            .split(',')
            .map(|d| d.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::invalid(format!("cannot parse --dims `{spec}`")))?;
        let have = state.layout().dims();
        if want != have {
            return Err(CliError::invalid(format!(
                "unsupported dims {want:?} for kind `{name}` (it produces {have:?})"
            )));
        }
    }

    let metadata = Metadata {
        name: Some(name.into()),
        seed: seeded.then_some(ctx.seed),
    };
    let file = StateFile::from_state(&state, Some(metadata));
    match ctx.out.as_deref() {
        Some(path) => statefile::save(path, &file)?,
        None => {
            let mut text = serde_json::to_string_pretty(&file)
                .map_err(|e| CliError::invalid(format!("serialization failed: {e}")))?;
            text.push('\n');
            print!("{text}");
        }
    }
    Ok(0)
}

fn cmd_cqmi(ctx: &Ctx) -> Result<u8, CliError> {
    let started = Instant::now();
    let (state, path) = load_state(ctx)?;
    let groups = parse_groups(state.layout(), ctx.groups.as_deref(), 3)?;
    let value = cqmi(
        &state,
        &refs(&groups[0]),
        &refs(&groups[1]),
        &refs(&groups[2]),
    )
    .map_err(CliError::solver)?;

    let mut report = Report::new("cqmi", ctx.seed);
    report.set("inputs", inputs_value(&path, Some(&groups), json!({})));
    report.set("values", json!({ "cqmi_bits": num(value) }));
    finish(ctx, report, started, true)
}

enum Measure {
    Fidelity,
    RelativeEntropy,
}

fn cmd_single_measure(ctx: &Ctx, measure: Measure) -> Result<u8, CliError> {
    let started = Instant::now();
    let (state, path) = load_state(ctx)?;
    let groups = parse_groups(state.layout(), ctx.groups.as_deref(), 3)?;
    let problem = RecoveryProblem::new(
        &state,
        &refs(&groups[0]),
        &refs(&groups[1]),
        &refs(&groups[2]),
    )
    .map_err(CliError::validation)?;

    let (command, value_key, outcome) = match measure {
        Measure::Fidelity => (
            "for",
            "fidelity",
            problem
                .fidelity_of_recovery(&ctx.opts)
                .map_err(CliError::solver)?,
        ),
        Measure::RelativeEntropy => (
            "ror",
            "relative_entropy_bits",
            problem
                .relative_entropy_of_recovery(&ctx.opts)
                .map_err(CliError::solver)?,
        ),
    };

    let mut report = Report::new(command, ctx.seed);
    report.set(
        "inputs",
        inputs_value(&path, Some(&groups), json!({ "tol": num(ctx.opts.tol) })),
    );
    report.set(
        "values",
        json!({
            value_key: num(outcome.value),
            "certified": num(outcome.certified),
            "cqmi_bits": num(problem.cqmi_bits()),
            "iterations": outcome.iterations,
            "converged": outcome.converged,
        }),
    );
    report.set("residuals", outcome_residuals(&outcome));
    if ctx.witness {
        report.set(
            "witness",
            json!({ "choi": matrix_value(outcome.channel.choi()) }),
        );
    }
    finish(ctx, report, started, outcome.converged)
}

fn cmd_dh(ctx: &Ctx, epsilons: &[f64], copies: usize) -> Result<u8, CliError> {
    let started = Instant::now();
    let (state, path) = load_state(ctx)?;
    let groups = parse_groups(state.layout(), ctx.groups.as_deref(), 3)?;

    let mut rows = Vec::new();
    let mut table = Vec::new();
    let mut witnesses = Vec::new();
    let mut converged = true;
    for n in 1..=copies.max(1) {
        let (state_n, groups_n) = multi_copy(
            &state,
            &refs(&groups[0]),
            &refs(&groups[1]),
            &refs(&groups[2]),
            n,
        )
        .map_err(CliError::validation)?;
        let problem = RecoveryProblem::new(
            &state_n,
            &refs(&groups_n.a),
            &refs(&groups_n.b),
            &refs(&groups_n.c),
        )
        .map_err(CliError::validation)?;
        let reports = problem
            .hypothesis_testing_sweep(epsilons, &ctx.opts)
            .map_err(CliError::solver)?;
        for r in &reports {
            converged &= r.outcome.converged;
            rows.push((
                n,
                r.epsilon,
                r.value_bits,
                r.outcome.feasibility_residual,
            ));
            table.push(json!({
                "n": n,
                "epsilon": num(r.epsilon),
                "value_bits": num(r.value_bits),
                "per_copy_bits": num(r.value_bits / n as f64),
                "floor_bits": num(r.floor_bits),
                "beta": num(r.beta),
                "residual": num(r.outcome.feasibility_residual),
                "converged": r.outcome.converged,
            }));
            if ctx.witness {
                witnesses.push(json!({
                    "n": n,
                    "epsilon": num(r.epsilon),
                    "choi": matrix_value(r.outcome.channel.choi()),
                }));
            }
        }
    }

    let mut report = Report::new("dh", ctx.seed);
    report.set(
        "inputs",
        inputs_value(
            &path,
            Some(&groups),
            json!({
                "epsilons": epsilons.iter().map(|&e| num(e)).collect::<Vec<_>>(),
                "copies": copies.max(1),
                "tol": num(ctx.opts.tol),
            }),
        ),
    );
    report.set("values", json!({ "table": table }));
    if ctx.witness {
        report.set("witness", Value::Array(witnesses));
    }
    if let Some(out) = ctx.out.as_deref() {
        report::write_sweep_csv(&report::csv_sibling(out), &rows)?;
    }
    finish(ctx, report, started, converged)
}

fn cmd_chain(ctx: &Ctx, epsilons: &[f64]) -> Result<u8, CliError> {
    let started = Instant::now();
    let (state, path) = load_state(ctx)?;
    let groups = parse_groups(state.layout(), ctx.groups.as_deref(), 3)?;
    let epsilons: Vec<f64> = if epsilons.is_empty() {
        vec![0.1, 0.5]
    } else {
        epsilons.to_vec()
    };
    let chain = chain_report(
        &state,
        &refs(&groups[0]),
        &refs(&groups[1]),
        &refs(&groups[2]),
        &epsilons,
        &ctx.opts,
    )
    .map_err(CliError::solver)?;

    let mut report = Report::new("chain", ctx.seed);
    report.set(
        "inputs",
        inputs_value(
            &path,
            Some(&groups),
            json!({
                "epsilons": epsilons.iter().map(|&e| num(e)).collect::<Vec<_>>(),
                "tol": num(ctx.opts.tol),
            }),
        ),
    );
    report.set(
        "values",
        json!({
            "cqmi_bits": num(chain.cqmi_bits),
            "neg_log2_fidelity": num(chain.neg_log2_fidelity),
            "d1_bits": num(chain.d1_bits),
            "d2_half_bits": chain.d2_half_bits.map(num).unwrap_or(Value::Null),
            "dh_bits": chain
                .dh_bits
                .iter()
                .map(|(e, v)| json!({ "epsilon": num(*e), "value_bits": num(*v) }))
                .collect::<Vec<_>>(),
            "i_minus_d1_bits": num(chain.i_minus_d1_bits),
        }),
    );
    report.set(
        "flags",
        Value::Array(
            chain
                .flags
                .iter()
                .map(|f| {
                    json!({
                        "name": f.name,
                        "satisfied": f.satisfied,
                        "slack": num(f.slack),
                    })
                })
                .collect(),
        ),
    );
    report.set("all_satisfied", json!(chain.all_satisfied()));
    finish(ctx, report, started, true)
}

fn cmd_closure(ctx: &Ctx, samples: usize) -> Result<u8, CliError> {
    let started = Instant::now();
    let (state, path) = load_state(ctx)?;
    let groups = parse_groups(state.layout(), ctx.groups.as_deref(), 3)?;
    let suite = closure_suite(
        &state,
        &refs(&groups[0]),
        &refs(&groups[1]),
        &refs(&groups[2]),
        samples,
        ctx.seed,
    )
    .map_err(CliError::solver)?;

    let mut report = Report::new("closure", ctx.seed);
    report.set(
        "inputs",
        inputs_value(&path, Some(&groups), json!({ "samples": samples })),
    );
    report.set(
        "checks",
        Value::Array(
            suite
                .checks
                .iter()
                .map(|c| {
                    json!({
                        "name": c.name,
                        "residual": num(c.residual),
                        "passed": c.passed,
                    })
                })
                .collect(),
        ),
    );
    report.set("all_passed", json!(suite.all_passed()));
    finish(ctx, report, started, true)
}

fn cmd_qip4(ctx: &Ctx, optimize: bool, strategy: Option<&Path>) -> Result<u8, CliError> {
    let started = Instant::now();
    let (phi, path, groups) = merged_pure(ctx)?;

    match strategy {
        Some(strategy_path) => {
            let s = statefile::load_strategy4(strategy_path)?;
            let value = qip::simulate_qip4(&phi, &s).map_err(CliError::validation)?;
            let mut report = Report::new("qip4", ctx.seed);
            report.set(
                "inputs",
                inputs_value(
                    &path,
                    Some(&groups),
                    json!({ "strategy": strategy_path.display().to_string() }),
                ),
            );
            report.set("values", json!({ "acceptance": num(value) }));
            finish(ctx, report, started, true)
        }
        None => {
            if !optimize {
                return Err(CliError::invalid(
                    "pass --optimize or --strategy <FILE>".to_string(),
                ));
            }
            let out = qip::optimize_qip4(&phi, &ctx.opts).map_err(CliError::solver)?;
            let mut report = Report::new("qip4", ctx.seed);
            report.set(
                "inputs",
                inputs_value(
                    &path,
                    Some(&groups),
                    json!({ "optimize": true, "tol": num(ctx.opts.tol) }),
                ),
            );
            report.set(
                "values",
                json!({
                    "acceptance": num(out.value),
                    "engine_fidelity": num(out.engine_value),
                    "discrepancy": out.discrepancy,
                    "iterations": out.report.iterations,
                    "converged": out.report.converged,
                }),
            );
            report.set(
                "residuals",
                json!({
                    "feasibility": num(out.report.feasibility_residual),
                    "stationarity": num(out.report.stationarity_residual),
                }),
            );
            if ctx.witness {
                report.set(
                    "witness",
                    json!({
                        "u": matrix_value(out.report.witness.u()),
                        "v": matrix_value(out.report.witness.v()),
                    }),
                );
            }
            finish(ctx, report, started, out.report.converged)
        }
    }
}

fn cmd_qip2(ctx: &Ctx, honest: bool, sweep: Option<usize>) -> Result<u8, CliError> {
    let started = Instant::now();
    if !honest && sweep.is_none() {
        return Err(CliError::invalid("pass --honest or --sweep <N>".to_string()));
    }
    let (phi, path, groups) = merged_pure(ctx)?;
    let num_random = sweep.unwrap_or(0);
    let rep = qip::qip2_bound_check(&phi, num_random, ctx.seed, &ctx.opts)
        .map_err(CliError::solver)?;

    let mut report = Report::new("qip2", ctx.seed);
    report.set(
        "inputs",
        inputs_value(
            &path,
            Some(&groups),
            json!({ "random_strategies": num_random, "tol": num(ctx.opts.tol) }),
        ),
    );
    report.set(
        "values",
        json!({
            "fidelity": num(rep.fidelity),
            "bound": num(rep.bound),
            "honest_acceptance": num(rep.honest_value),
            "identity_acceptance": num(rep.identity_value),
            "max_random_acceptance": num(rep.max_random_value),
            "random_strategies": rep.num_random,
            "all_within_bound": rep.all_within_bound,
        }),
    );
    finish(ctx, report, started, true)
}

fn cmd_duality(ctx: &Ctx) -> Result<u8, CliError> {
    let started = Instant::now();
    let (phi, path, groups) = merged_pure(ctx)?;
    let rho = phi.density().map_err(CliError::validation)?;

    let side = |keep: [&str; 3], cond: &str| -> Result<RecoveryOutcome, CliError> {
        let reduced = rho.reduce(&keep).map_err(CliError::validation)?;
        RecoveryProblem::new(&reduced, &["A"], &["B"], &[cond])
            .map_err(CliError::validation)?
            .fidelity_of_recovery(&ctx.opts)
            .map_err(CliError::solver)
    };
    let given_c = side(["A", "B", "C"], "C")?;
    let given_d = side(["A", "B", "D"], "D")?;
    let gap = (given_c.value - given_d.value).abs();

    let mut report = Report::new("duality", ctx.seed);
    report.set(
        "inputs",
        inputs_value(&path, Some(&groups), json!({ "tol": num(ctx.opts.tol) })),
    );
    report.set(
        "values",
        json!({
            "fidelity_given_c": num(given_c.value),
            "fidelity_given_d": num(given_d.value),
            "gap": num(gap),
        }),
    );
    report.set(
        "residuals",
        json!({
            "given_c": outcome_residuals(&given_c),
            "given_d": outcome_residuals(&given_d),
        }),
    );
    finish(ctx, report, started, given_c.converged && given_d.converged)
}

fn cmd_decide(ctx: &Ctx, alpha: f64, beta: f64) -> Result<u8, CliError> {
    let started = Instant::now();
    let (state, path) = load_state(ctx)?;
    let groups = parse_groups(state.layout(), ctx.groups.as_deref(), 3)?;
    let decision = decide(
        &state,
        &refs(&groups[0]),
        &refs(&groups[1]),
        &refs(&groups[2]),
        alpha,
        beta,
        ctx.tol,
        &ctx.opts,
    )
    .map_err(CliError::solver)?;

    let mut report = Report::new("decide", ctx.seed);
    report.set(
        "inputs",
        inputs_value(
            &path,
            Some(&groups),
            json!({
                "alpha": num(alpha),
                "beta": num(beta),
                "tol": num(decision.tol),
            }),
        ),
    );
    report.set(
        "values",
        json!({
            "verdict": decision.verdict.as_str(),
            "fidelity": num(decision.fidelity),
        }),
    );
    finish(ctx, report, started, true)
}

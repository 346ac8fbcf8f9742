//! `llp-lab`: learners, trials, bounds, reductions, oracles and generators
//! from the command line. Errors go to stderr as one JSON object.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use llp_core::bounds::{
    empirical_generalization_audit, gap_sample_size, hoeffding_sample_size, uniform_convergence_bound,
    uniform_convergence_sample_size,
};
use llp_core::generate::{random_consistency, random_epsc, random_nat_distribution, random_target, random_x3c};
use llp_core::harness::experiments::{experiment_json, run_experiment, transcript_lines, ExperimentConfig, ExperimentKind};
use llp_core::harness::{render_report, run_trials, ReportFormat, SampleSizeSpec, TrialConfig};
use llp_core::hypothesis::DEFAULT_BUDGET;
use llp_core::learners::{
    erm_proportion_matcher, gap_learner, halfspace_sweep_learner, improper_learner, noisy_parity_uniform_learner,
    subset_sum_learner, window_learner, HalfspaceParams, LearnerId, LearnerOutcome,
};
use llp_core::model::{draw_sample, true_proportion};
use llp_core::oracles::{brute_consistency, brute_epsc, brute_llp_oracle, brute_subset_sum, brute_x3c, OracleMode};
use llp_core::rational::parse_rational;
use llp_core::reductions::{
    chain_check, epsc_to_conjunction_consistency, epsc_to_disjunction_consistency, x3c_to_epsc, ConsistencyInstance,
    EpscInstance, X3cInstance,
};
use llp_core::rng::derive_seed;
use llp_core::{ClassDescriptor, ClassId, FiniteDistribution, LlpError, LlpTask};

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "llp-lab", version, about = "Learning from label proportions: learners, trials and reductions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one learner on a task file and print the outcome.
    Learn(LearnArgs),
    /// Monte Carlo trials of a learner's (ε, δ) guarantee.
    Trials(TrialsArgs),
    /// Sample sizes and bound values.
    Bounds(BoundsArgs),
    /// Run a reduction or experiment config, or a reduction chain on one instance.
    Reduce(ReduceArgs),
    /// Brute-force solvers.
    Oracle(OracleArgs),
    /// Seeded random instances and tasks.
    Gen(GenArgs),
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long)]
    task: PathBuf,
    #[arg(long)]
    learner: LearnerId,
    /// Seed for randomized learners.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Noise bound for the noisy-parity learner.
    #[arg(long)]
    eta_prime: Option<String>,
    #[arg(long, default_value_t = 3)]
    retries: u32,
}

#[derive(Args)]
struct TrialsArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    learner: Option<LearnerId>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// A count or "from-bounds".
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    /// Record per-trial wall time (makes reports non-reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved config and exit.
    #[arg(long)]
    print_config: bool,
    /// Exit 3 when the success rate misses the config's threshold.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct BoundsArgs {
    /// ⌈ln(2/δ)/(2ε²)⌉.
    #[arg(long, group = "which")]
    hoeffding: bool,
    /// Hoeffding at β/2.
    #[arg(long, group = "which")]
    gap: bool,
    /// Uniform-convergence bound value at (d, m, δ).
    #[arg(long, group = "which")]
    uc_bound: bool,
    /// Smallest m with uniform-convergence bound ≤ ε − slack.
    #[arg(long, group = "which")]
    uc_size: bool,
    /// Per-trial audit CSV for an audit config.
    #[arg(long, group = "which")]
    audit: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    d: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long, default_value_t = 0.0)]
    slack: f64,
}

#[derive(Args)]
struct ReduceArgs {
    /// Experiment config (JSON).
    #[arg(long, conflicts_with = "chain")]
    config: Option<PathBuf>,
    /// x3c-epsc, x3c-epsc-disjunction or x3c-epsc-conjunction.
    #[arg(long, requires = "input")]
    chain: Option<String>,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Oracle behaviour on wrong proportions: arbitrary or reject.
    #[arg(long)]
    mode: Option<OracleMode>,
    /// Oracle transcript as JSON lines.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    print_config: bool,
    /// Exit 3 when the run misses its threshold or the chain disagrees.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("problem").required(true).args(["x3c", "epsc", "consistency", "subset_sum", "llp"])))]
struct OracleArgs {
    #[arg(long)]
    x3c: bool,
    #[arg(long)]
    epsc: bool,
    #[arg(long)]
    consistency: bool,
    /// Input `{"counts": [...], "t": ...}`.
    #[arg(long)]
    subset_sum: bool,
    /// Proportion matching on a task file's sample.
    #[arg(long)]
    llp: bool,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = OracleMode::Arbitrary)]
    mode: OracleMode,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
}

#[derive(Args)]
#[command(group(ArgGroup::new("kind").required(true).args(["x3c", "epsc", "consistency", "task"])))]
struct GenArgs {
    #[arg(long)]
    x3c: bool,
    #[arg(long)]
    epsc: bool,
    #[arg(long)]
    consistency: bool,
    #[arg(long)]
    task: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    universe: Option<usize>,
    #[arg(long)]
    triples: Option<usize>,
    #[arg(long)]
    subsets: Option<usize>,
    /// parity, monotone_disjunction, monotone_conjunction, finite_subset, window, halfspace.
    #[arg(long)]
    class: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Window span bound.
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    max_total: Option<u64>,
    #[arg(long)]
    m: Option<usize>,
    /// Support size of a random distribution over ℕ.
    #[arg(long)]
    support: Option<usize>,
    #[arg(long, default_value = "1/10")]
    epsilon: String,
    #[arg(long, default_value = "1/10")]
    delta: String,
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<LlpError> for Failure {
    fn from(e: LlpError) -> Self {
        let code = match e {
            LlpError::NoCandidateAccepted
            | LlpError::OracleReject
            | LlpError::UnreachableCount { .. }
            | LlpError::CollisionPersistent { .. } => EXIT_RUNTIME,
            _ => EXIT_USAGE,
        };
        Failure { code, kind: e.kind().into(), message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        LlpError::from(e).into()
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, kind: "UsageError".into(), message: message.into() }
}

type CliResult<T = ()> = Result<T, Failure>;

fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| LlpError::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn parse_file<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    Ok(serde_json::from_value(read_json(path)?)?)
}

/// A bare task, or the `{"task": ..., "target": ...}` that `gen --task` writes.
fn read_task(path: &Path) -> CliResult<LlpTask> {
    let mut raw = read_json(path)?;
    if let Some(task) = raw.get_mut("task") {
        raw = task.take();
    }
    let task: LlpTask = serde_json::from_value(raw)?;
    task.validate()?;
    Ok(task)
}

/// Writes to stdout; a closed pipe (`| head`) ends output quietly.
fn emit(text: &str) -> CliResult {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(LlpError::from(e).into()),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(value: &T) -> CliResult {
    emit(&(serde_json::to_string_pretty(value)? + "\n"))
}

fn write_or_print(text: &str, out: Option<&Path>) -> CliResult {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| LlpError::Io(format!("{}: {e}", path.display())))?,
        None => emit(text)?,
    }
    Ok(())
}

fn check_exit(passed: bool) -> CliResult {
    if passed {
        Ok(())
    } else {
        Err(Failure { code: EXIT_CHECK, kind: "CheckFailed".into(), message: "acceptance check failed".into() })
    }
}

fn rational_json(text: &str) -> CliResult<Value> {
    Ok(Value::String(parse_rational(text)?.to_string()))
}

fn learn(args: LearnArgs) -> CliResult {
    let task = read_task(&args.task)?;
    let sample = &task.sample;
    let outcome: LearnerOutcome = match args.learner {
        LearnerId::Improper => improper_learner(sample),
        LearnerId::Gap => {
            let dist = task.distribution.as_ref().ok_or_else(|| usage("the gap learner needs a task distribution"))?;
            gap_learner(&task.class, dist, sample, args.budget)?
        }
        LearnerId::Erm => erm_proportion_matcher(&task.class, sample, args.budget)?,
        LearnerId::SubsetSum => subset_sum_learner(sample)?,
        LearnerId::Window => window_learner(sample, task.class.k.ok_or_else(|| usage("window class needs k"))?)?,
        LearnerId::Halfspace => {
            halfspace_sweep_learner(sample, args.seed, HalfspaceParams { retries: args.retries, precision_bits: None })?
        }
        LearnerId::NoisyParity => {
            let eta_prime = args.eta_prime.as_deref().ok_or_else(|| usage("--eta-prime is required"))?;
            noisy_parity_uniform_learner(sample, &parse_rational(eta_prime)?, task.class.n)?
        }
    };
    print_json(&outcome)
}

fn trials(args: TrialsArgs) -> CliResult {
    let mut raw = read_json(&args.config)?;
    let fields = raw.as_object_mut().ok_or_else(|| usage("a trial config must be a JSON object"))?;
    if let Some(l) = args.learner {
        fields.insert("learner".into(), serde_json::to_value(l)?);
    }
    if let Some(t) = args.trials {
        fields.insert("trials".into(), t.into());
    }
    if let Some(s) = args.seed {
        fields.insert("seed".into(), s.into());
    }
    if let Some(m) = &args.m {
        let value = match m.parse::<u64>() {
            Ok(v) => v.into(),
            Err(_) => Value::String(m.clone()),
        };
        fields.insert("m".into(), value);
    }
    if let Some(e) = &args.epsilon {
        fields.insert("epsilon".into(), rational_json(e)?);
    }
    if let Some(d) = &args.delta {
        fields.insert("delta".into(), rational_json(d)?);
    }
    if args.timing {
        fields.insert("record_timing".into(), true.into());
    }
    let mut config: TrialConfig = serde_json::from_value(raw)?;
    config.validate()?;
    if args.print_config {
        config.m = SampleSizeSpec::Explicit(config.resolve_m()?);
        return print_json(&config);
    }
    let report = run_trials(&config)?;
    write_or_print(&render_report(&report, args.format)?, args.out.as_deref())?;
    eprintln!(
        "{}",
        json!({
            "trials": report.aggregate.trials,
            "successes": report.aggregate.successes,
            "success_rate": report.aggregate.success_rate.to_string(),
            "ci_low": report.aggregate.ci_low,
            "ci_high": report.aggregate.ci_high,
            "m": report.m,
        })
    );
    if args.check {
        check_exit(report.passed())?;
    }
    Ok(())
}

fn need<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| usage(format!("--{flag} is required")))
}

fn bounds(args: BoundsArgs) -> CliResult {
    let value: Value = if args.hoeffding {
        hoeffding_sample_size(need(args.eps, "eps")?, need(args.delta, "delta")?)?.into()
    } else if args.gap {
        gap_sample_size(need(args.beta, "beta")?, need(args.delta, "delta")?)?.into()
    } else if args.uc_bound {
        uniform_convergence_bound(need(args.d, "d")?, need(args.m, "m")?, need(args.delta, "delta")?)?.into()
    } else if args.uc_size {
        uniform_convergence_sample_size(need(args.d, "d")?, need(args.eps, "eps")?, need(args.delta, "delta")?, args.slack)?
            .into()
    } else if let Some(path) = &args.audit {
        let config: ExperimentConfig = parse_file(path)?;
        let ExperimentKind::Audit { class, distribution, target, m, epsilon, delta, trials, seed } = config.kind else {
            return Err(usage("--audit needs an audit config"));
        };
        let m = match m {
            SampleSizeSpec::Explicit(m) => m,
            SampleSizeSpec::Rule(_) => {
                let d = llp_core::hypothesis::vc_dimension(&class)
                    .finite()
                    .ok_or_else(|| usage("audit needs a finite VC dimension"))?;
                uniform_convergence_sample_size(d.max(1), epsilon, delta, 0.0)?
            }
        };
        let summary = empirical_generalization_audit(&class, &distribution, &target, m, delta, trials, seed)?;
        emit(&summary.to_csv())?;
        return Ok(());
    } else {
        return Err(usage("choose one of --hoeffding, --gap, --uc-bound, --uc-size, --audit"));
    };
    emit(&format!("{value}\n"))
}

fn reduce(args: ReduceArgs) -> CliResult {
    if let Some(chain) = &args.chain {
        let inst: X3cInstance = parse_file(need(args.input.as_deref(), "in")?)?;
        let epsc = x3c_to_epsc(&inst, args.ell)?;
        let target = match chain.as_str() {
            "x3c-epsc" => Value::Null,
            "x3c-epsc-disjunction" => serde_json::to_value(epsc_to_disjunction_consistency(&epsc)?)?,
            "x3c-epsc-conjunction" => serde_json::to_value(epsc_to_conjunction_consistency(&epsc)?)?,
            other => return Err(usage(format!("unknown chain {other:?}"))),
        };
        let mut out = json!({ "epsc": epsc });
        if !target.is_null() {
            out["consistency"] = target;
        }
        if args.check {
            let report = chain_check(&inst, args.ell, DEFAULT_BUDGET)?;
            out["report"] = serde_json::to_value(&report)?;
            write_or_print(&(serde_json::to_string_pretty(&out)? + "\n"), args.out.as_deref())?;
            return check_exit(report.agree);
        }
        return write_or_print(&(serde_json::to_string_pretty(&out)? + "\n"), args.out.as_deref());
    }
    let path = need(args.config.as_deref(), "config or --chain")?;
    let mut raw = read_json(path)?;
    let fields = raw.as_object_mut().ok_or_else(|| usage("an experiment config must be a JSON object"))?;
    if let Some(s) = args.seed {
        fields.insert("seed".into(), s.into());
    }
    if let Some(mode) = args.mode {
        fields.insert("mode".into(), serde_json::to_value(mode)?);
    }
    let config: ExperimentConfig = serde_json::from_value(raw)?;
    if args.print_config {
        return print_json(&config);
    }
    let (report, transcript) = run_experiment(&config, args.transcript.is_some())?;
    if let Some(t) = &args.transcript {
        write_or_print(&transcript_lines(&transcript), Some(t))?;
    }
    write_or_print(&experiment_json(&report)?, args.out.as_deref())?;
    eprintln!(
        "{}",
        json!({
            "runs": report.runs,
            "successes": report.successes,
            "required": report.required_successes(),
            "invariant_failures": report.invariant_failures,
        })
    );
    if args.check {
        check_exit(report.passed())?;
    }
    Ok(())
}

fn oracle(args: OracleArgs) -> CliResult {
    if args.x3c {
        print_json(&brute_x3c(&parse_file::<X3cInstance>(&args.input)?, args.budget)?)
    } else if args.epsc {
        print_json(&brute_epsc(&parse_file::<EpscInstance>(&args.input)?)?)
    } else if args.consistency {
        print_json(&brute_consistency(&parse_file::<ConsistencyInstance>(&args.input)?, args.budget)?)
    } else if args.subset_sum {
        #[derive(serde::Deserialize)]
        struct Input {
            counts: Vec<u64>,
            t: u64,
        }
        let input: Input = parse_file(&args.input)?;
        print_json(&brute_subset_sum(&input.counts, input.t)?)
    } else {
        let task = read_task(&args.input)?;
        let claimed = task.sample.p_hat();
        print_json(&brute_llp_oracle(&task.class, &task.sample, &claimed, args.mode, args.budget)?)
    }
}

fn class_from_args(args: &GenArgs) -> CliResult<ClassDescriptor> {
    let id: ClassId = serde_json::from_value(Value::String(need(args.class.clone(), "class")?.replace('-', "_")))
        .map_err(|_| usage("unknown class"))?;
    let n = args.n.unwrap_or(0);
    Ok(match id {
        ClassId::Parity => ClassDescriptor::parities(n),
        ClassId::MonotoneDisjunction => ClassDescriptor::disjunctions(n),
        ClassId::MonotoneConjunction => ClassDescriptor::conjunctions(n),
        ClassId::FiniteSubset => ClassDescriptor::finite_subsets(None),
        ClassId::Window => ClassDescriptor::windows(need(args.k, "k")?, None),
        ClassId::Halfspace => ClassDescriptor::halfspaces(n),
    })
}

fn gen(args: GenArgs) -> CliResult {
    if args.x3c {
        let inst = random_x3c(need(args.universe, "universe")?, need(args.triples, "triples")?, args.seed)?;
        return print_json(&inst);
    }
    if args.epsc {
        return print_json(&random_epsc(need(args.universe, "universe")?, need(args.subsets, "subsets")?, args.seed)?);
    }
    let class = class_from_args(&args)?;
    if args.consistency {
        return print_json(&random_consistency(&class, need(args.max_total, "max-total")?, args.seed)?);
    }
    let over_naturals = matches!(class.class_id, ClassId::FiniteSubset | ClassId::Window);
    let dist = if over_naturals {
        random_nat_distribution(need(args.support, "support")?, derive_seed(args.seed, 3))?
    } else {
        FiniteDistribution::uniform_cube(class.n)?
    };
    let class = match (over_naturals, dist.atoms()) {
        (true, Some(atoms)) => class.with_ground_set(atoms.iter().filter_map(|(p, _)| p.as_nat()).collect()),
        _ => class,
    };
    let target = random_target(&class, derive_seed(args.seed, 1))?;
    let p_c = true_proportion(&target, &dist)?;
    let sample = draw_sample(&dist, need(args.m, "m")?, derive_seed(args.seed, 0), &target)?;
    let task = LlpTask::new(class, parse_rational(&args.epsilon)?, parse_rational(&args.delta)?, Some(dist), sample)?;
    print_json(&json!({ "task": task, "target": target, "p_c": p_c.to_string() }))
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Learn(a) => learn(a),
        Command::Trials(a) => trials(a),
        Command::Bounds(a) => bounds(a),
        Command::Reduce(a) => reduce(a),
        Command::Oracle(a) => oracle(a),
        Command::Gen(a) => gen(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            eprintln!("{}", json!({ "error": "UsageError", "message": message.trim() }));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "message": f.message }));
            ExitCode::from(f.code)
        }
    }
}

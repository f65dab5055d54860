//! `creative-mdp`: validate MDP files, learn policies, and analyze runs.
//!
//! Exit status is 0 on success, 1 for invalid data or a failed analysis, and
//! 2 when a file cannot be read or written.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use creative_mdp::analyzer::default_starts;
use creative_mdp::io::{parse_mdp, parse_policy, parse_run, parse_values, run_to_json};
use creative_mdp::learner::learn;
use creative_mdp::{
    analyze, Algorithm, AnalysisConfig, AnalyzeError, CreativityReport, FormatError, LearnError, LearnerConfig,
    MappingKind, Normalization, RunRecord, StateId, TabularMdp, ValueEstimate,
};

#[derive(Debug, Parser)]
#[command(
    name = "creative-mdp",
    version,
    about = "Creativity analysis for agents in finite MDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that input files parse and are internally consistent.
    Validate(ValidateArgs),
    /// Analyze a run (or a single policy) under one concept mapping.
    Analyze(AnalyzeArgs),
    /// Run a learner and write the resulting run record.
    Learn(LearnArgs),
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    mdp: Option<PathBuf>,
    /// Checked against --mdp.
    #[arg(long, requires = "mdp")]
    policy: Option<PathBuf>,
    /// Checked against --mdp.
    #[arg(long, requires = "mdp")]
    values: Option<PathBuf>,
    #[arg(long)]
    run: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MappingArg {
    S,
    Sas,
    Tau,
}

impl From<MappingArg> for MappingKind {
    fn from(m: MappingArg) -> Self {
        match m {
            MappingArg::S => MappingKind::State,
            MappingArg::Sas => MappingKind::Transition,
            MappingArg::Tau => MappingKind::Trajectory,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormalizationArg {
    MinMax,
    Affine,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Td,
    ValueIteration,
}

/// Options shared by `analyze` and `learn --analyze`.
#[derive(Debug, Args)]
struct AnalysisArgs {
    #[arg(long, value_enum, default_value = "sas")]
    mapping: MappingArg,
    /// Acceptance threshold: the conceptual space is everything scoring above it.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Value threshold.
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Longest trajectory for the tau mapping. Defaults to |S|·|A|.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, value_enum, default_value = "min-max")]
    normalization: NormalizationArg,
    /// Affine normalization: x * scale + offset, clamped to [0, 1].
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
    /// Logistic normalization: 1 / (1 + exp(-slope * (x - center))).
    #[arg(long, default_value_t = 0.0)]
    center: f64,
    #[arg(long, default_value_t = 1.0)]
    slope: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Run record produced by `learn`.
    #[arg(long, conflicts_with_all = ["mdp", "policy"], required_unless_present = "mdp")]
    run: Option<PathBuf>,
    #[arg(long, requires = "policy")]
    mdp: Option<PathBuf>,
    #[arg(long, requires = "mdp")]
    policy: Option<PathBuf>,
    /// Value estimate for snapshots that carry none.
    #[arg(long)]
    values: Option<PathBuf>,
    /// Start state label; repeat for several. Defaults to the run's start states, or every state.
    #[arg(long = "start")]
    starts: Vec<String>,
    /// Where to write the report; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    analysis: AnalysisArgs,
}

#[derive(Debug, Args)]
struct LearnArgs {
    #[arg(long)]
    mdp: PathBuf,
    #[arg(long, value_enum, default_value = "td")]
    algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    #[arg(long, default_value_t = 500)]
    episodes: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    learning_rate: f64,
    /// Snapshot every this many episodes (td) or sweeps (value-iteration).
    #[arg(long, default_value_t = 50)]
    snapshot_every: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Episode start state label; repeat for several. Defaults to every state.
    #[arg(long = "start")]
    starts: Vec<String>,
    /// Where to write the run record; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Analyze the run after learning.
    #[arg(long)]
    analyze: bool,
    /// Where to write the report when analyzing.
    #[arg(long, requires = "analyze")]
    report: Option<PathBuf>,
    #[command(flatten)]
    analysis: AnalysisArgs,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}", format_diagnostics(path, source))]
    Format { path: PathBuf, source: FormatError },
    #[error(transparent)]
    Analyze(#[from] AnalyzeError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("{0}")]
    Usage(String),
    /// Several problems; the others were already printed.
    #[error("{last}")]
    Failed { code: u8, last: Box<CliError> },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 2,
            CliError::Failed { code, .. } => *code,
            _ => 1,
        }
    }
}

fn format_diagnostics(path: &Path, err: &FormatError) -> String {
    match err {
        FormatError::Invalid(violations) => violations
            .iter()
            .map(|v| format!("{}: {}: {}", path.display(), v.location, v.message))
            .collect::<Vec<_>>()
            .join("\n"),
        other => format!("{}: {other}", path.display()),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn load<T>(path: &Path, parse: impl FnOnce(&str) -> Result<T, FormatError>) -> Result<T, CliError> {
    let text = read(path)?;
    parse(&text).map_err(|source| CliError::Format {
        path: path.to_owned(),
        source,
    })
}

fn resolve_starts(mdp: &TabularMdp, labels: &[String]) -> Result<Vec<StateId>, CliError> {
    labels
        .iter()
        .map(|l| {
            mdp.state_id(l)
                .ok_or_else(|| CliError::Usage(format!("unknown start state `{l}`")))
        })
        .collect()
}

fn validate(args: &ValidateArgs) -> Result<(), CliError> {
    if args.mdp.is_none() && args.run.is_none() {
        return Err(CliError::Usage("nothing to validate: pass --mdp and/or --run".into()));
    }
    // Report every file's problems before failing.
    let mut failures = Vec::new();
    if let Some(path) = &args.mdp {
        match load(path, parse_mdp) {
            Ok(mdp) => {
                if let Some(p) = &args.policy {
                    if let Err(e) = load(p, |t| parse_policy(t, &mdp)) {
                        failures.push(e);
                    }
                }
                if let Some(p) = &args.values {
                    if let Err(e) = load(p, |t| parse_values(t, &mdp)) {
                        failures.push(e);
                    }
                }
            }
            Err(e) => failures.push(e),
        }
    }
    if let Some(path) = &args.run {
        if let Err(e) = load(path, parse_run) {
            failures.push(e);
        }
    }
    let Some(worst) = failures.iter().map(CliError::exit_code).max() else {
        println!("ok");
        return Ok(());
    };
    let mut failures = failures.into_iter();
    let last = failures.next_back().expect("at least one failure");
    for e in failures {
        eprintln!("error: {e}");
    }
    Err(CliError::Failed {
        code: worst,
        last: Box::new(last),
    })
}

fn normalization(args: &AnalysisArgs) -> Normalization {
    match args.normalization {
        NormalizationArg::MinMax => Normalization::MinMax,
        NormalizationArg::Affine => Normalization::Affine {
            scale: args.scale,
            offset: args.offset,
        },
        NormalizationArg::Logistic => Normalization::Logistic {
            center: args.center,
            slope: args.slope,
        },
    }
}

fn analysis_config(args: &AnalysisArgs, mdp: &TabularMdp, fallback: Option<ValueEstimate>) -> AnalysisConfig {
    AnalysisConfig {
        mapping: args.mapping.into(),
        alpha: args.alpha,
        beta: args.beta,
        horizon: Some(args.horizon.unwrap_or(mdp.num_states() * mdp.num_actions())),
        normalization: normalization(args),
        fallback_values: fallback,
    }
}

fn render(report: &CreativityReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Text => report.to_text(),
    }
}

/// Writes the report to `out` (or stdout) and the summary line to stdout
/// (or stderr when the report itself went to stdout).
fn emit(report: &CreativityReport, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let body = render(report, format);
    match out {
        Some(path) => {
            write(path, &body)?;
            println!("{}", report.summary());
        }
        None => {
            print!("{body}");
            eprintln!("{}", report.summary());
        }
    }
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let mut run = match (&args.run, &args.mdp, &args.policy) {
        (Some(path), _, _) => load(path, parse_run)?,
        (None, Some(mdp_path), Some(policy_path)) => {
            let mdp = load(mdp_path, parse_mdp)?;
            let policy = load(policy_path, |t| parse_policy(t, &mdp))?;
            let starts = default_starts(mdp.num_states());
            RunRecord::single(mdp, policy, None, starts)
        }
        _ => return Err(CliError::Usage("pass --run, or --mdp with --policy".into())),
    };
    if !args.starts.is_empty() {
        run.start_states = resolve_starts(&run.mdp, &args.starts)?;
    }
    let fallback = match &args.values {
        Some(path) => Some(load(path, |t| parse_values(t, &run.mdp))?),
        None => None,
    };
    let cfg = analysis_config(&args.analysis, &run.mdp, fallback);
    let report = analyze(&run, &cfg)?;
    emit(&report, args.analysis.format, args.out.as_deref())
}

fn cmd_learn(args: &LearnArgs) -> Result<(), CliError> {
    let mdp = load(&args.mdp, parse_mdp)?;
    let starts = (!args.starts.is_empty())
        .then(|| resolve_starts(&mdp, &args.starts))
        .transpose()?;
    let cfg = LearnerConfig {
        algorithm: match args.algorithm {
            AlgorithmArg::Td => Algorithm::TabularTd,
            AlgorithmArg::ValueIteration => Algorithm::ValueIteration,
        },
        gamma: args.gamma,
        episodes: args.episodes,
        epsilon: args.epsilon,
        learning_rate: args.learning_rate,
        snapshot_every: args.snapshot_every,
        seed: args.seed,
        starts,
        ..LearnerConfig::default()
    };
    let run = learn(&mdp, &cfg)?;
    let json = run_to_json(&run);
    match &args.out {
        Some(path) => write(path, &json)?,
        None if args.analyze => {}
        None => print!("{json}"),
    }
    if args.analyze {
        let report = analyze(&run, &analysis_config(&args.analysis, &mdp, None))?;
        match &args.report {
            Some(path) => emit(&report, args.analysis.format, Some(path))?,
            None => println!("{}", report.summary()),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(args) => validate(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Learn(args) => cmd_learn(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

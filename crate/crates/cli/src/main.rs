//! `spreadblow`: command-line front end for the spread blow-up pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 precondition failure,
//! 3 algorithmic failure, 4 I/O or parse error.

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use spreadblow::Error;

#[derive(Debug, Parser)]
#[command(name = "spreadblow", version, about = "Spread blow-up lemma pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic instance.
    Gen(GenArgs),
    /// Quasirandom and super-regularity verdicts for a bipartite pair.
    CheckRegularity(CheckArgs),
    /// Exact-density super-regular subgraph of a pair.
    Extract(ExtractArgs),
    /// Sample uniform perfect matchings of a pair.
    MatchSample(MatchArgs),
    /// Embed a target into a class system.
    Embed(EmbedArgs),
    /// Star partition of a reduced graph.
    Stars(StarsArgs),
    /// Perturbed-graph trials for the k-th power of a Hamilton cycle.
    HamiltonRun(HamiltonArgs),
    /// Empirical vertex-spread report.
    SpreadReport(SpreadArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Bipartite,
    ClassSystem,
    TargetFactor,
    HamiltonHost,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MatchMode {
    Exact,
    Mcmc,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path (class-system: `<stem>.json`, with `<stem>.edges` alongside).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Side size of a bipartite pair.
    #[arg(long)]
    m: Option<usize>,
    /// Edge probability of a bipartite pair.
    #[arg(long)]
    p: Option<f64>,
    /// Number of classes.
    #[arg(long, default_value_t = 3)]
    r: usize,
    /// Class size N, or the vertex count n for hamilton-host.
    #[arg(long)]
    n: Option<usize>,
    /// Pair density (class-system) or leftover-vertex density (hamilton-host).
    #[arg(long, default_value_t = 0.5)]
    d: f64,
    /// Path-power fragment length of target-factor.
    #[arg(long, default_value_t = 0)]
    fragment: usize,
    /// Maximum degree the target may have.
    #[arg(long)]
    max_degree: Option<usize>,
    /// Class system for restricted targets.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Restricted target vertices.
    #[arg(long, default_value_t = 0)]
    restrictions: usize,
    /// Size of each restriction set as a fraction of N.
    #[arg(long, default_value_t = 0.5)]
    restrict_frac: f64,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    pair: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    #[arg(long, default_value_t = 0.3)]
    delta: f64,
    /// Quasirandom threshold; defaults to `ε·d⁴`.
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    pair: PathBuf,
    #[arg(long)]
    target_density: f64,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Quasirandom threshold for the verdict.
    #[arg(long, default_value_t = 0.05)]
    xi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge-list output of the subgraph.
    #[arg(long)]
    out: PathBuf,
    /// JSON verdict path (stdout when absent).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MatchArgs {
    #[arg(long)]
    pair: PathBuf,
    #[arg(long, default_value_t = 1)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = MatchMode::Exact)]
    mode: MatchMode,
    /// Markov-chain steps per sample; defaults to `50·m·log m`.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Matchings, one per line (stdout when absent; the summary then goes to stderr).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// ParamSet JSON; defaults to the desk chain with `d` = least pair density, `α = 0.4`.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    relaxed_p2: bool,
}

#[derive(Debug, Args)]
struct StarsArgs {
    #[arg(long)]
    reduced: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HamiltonArgs {
    #[arg(long)]
    host: PathBuf,
    #[arg(long)]
    k: usize,
    /// Edge probabilities, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    tries: usize,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Blow-up ParamSet JSON for the ξ-good sampler.
    #[arg(long)]
    params: Option<PathBuf>,
    /// CSV output (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Also store this many ξ-good bijections as JSON lines in `--phi-out`.
    #[arg(long, default_value_t = 0)]
    samples: usize,
    #[arg(long, requires = "samples")]
    phi_out: Option<PathBuf>,
    #[arg(long)]
    relaxed_p2: bool,
}

#[derive(Debug, Args)]
struct SpreadArgs {
    /// Stored bijections (JSON lines); alternative to `--system/--target`.
    #[arg(long, conflicts_with_all = ["system", "target"])]
    phis: Option<PathBuf>,
    #[arg(long, requires = "target")]
    system: Option<PathBuf>,
    #[arg(long, requires = "system")]
    target: Option<PathBuf>,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 1000)]
    probes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    relaxed_p2: bool,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    pub fn precondition(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Domain(_) | Error::Precondition(_) => 2,
            Error::Capability(_) | Error::Embedding { .. } | Error::Infeasible(_) => 3,
            Error::Parse(_) | Error::Io(_) | Error::Json(_) => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 4, message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure { code: 4, message: e.to_string() }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure { code: 4, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::CheckRegularity(a) => commands::check_regularity(a),
        Command::Extract(a) => commands::extract(a),
        Command::MatchSample(a) => commands::match_sample(a),
        Command::Embed(a) => commands::embed(a),
        Command::Stars(a) => commands::stars(a),
        Command::HamiltonRun(a) => commands::hamilton_run(a),
        Command::SpreadReport(a) => commands::spread_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

//! `crossgreed`: feature cross search, evaluation, hardness instances and theory checks.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error, 3 capacity exceeded.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "crossgreed", version, about = "Maximum-AUC feature cross search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select k columns maximizing the naive-Bayes normalized AUC.
    Search(SearchArgs),
    /// Evaluate one column set on both the naive-Bayes and the joint path.
    Eval(EvalArgs),
    /// Build densest-subgraph reduction instances from a graph.
    GenHard(GenHardArgs),
    /// Run the randomized checks of the submodularity lemmas.
    VerifyTheory(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Greedy,
    Lazy,
    Exhaustive,
}

#[derive(Args, Clone, Debug)]
pub struct DataArgs {
    /// Delimited text file with a header row.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Name of the 0/1 label column.
    #[arg(long, default_value = "label")]
    pub label: String,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Additive smoothing of the per-column frequencies.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
}

#[derive(Args, Clone, Debug)]
pub struct CapArgs {
    /// Float mode: drop convolution atoms whose masses are both below this.
    #[arg(long, default_value_t = 0.0)]
    pub prune_eps: f64,
    #[arg(long, default_value_t = crossgreed::score_dist::DEFAULT_ATOM_CAP)]
    pub atom_cap: usize,
    /// Cap on squared cross sizes for joint enumeration.
    #[arg(long, default_value_t = crossgreed::joint_eval::DEFAULT_PAIR_CAP)]
    pub pair_cap: u128,
}

#[derive(Args, Clone, Debug)]
pub struct SearchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Use a seeded synthetic naive-Bayes instance with this many columns instead of a dataset.
    #[arg(long, conflicts_with = "dataset")]
    pub synthetic: Option<usize>,
    /// Largest vocabulary of a synthetic column.
    #[arg(long, default_value_t = 6)]
    pub max_vocab: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Lazy)]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep selecting after the marginal gain drops to zero, up to k columns.
    #[arg(long)]
    pub pad_to_k: bool,
    #[arg(long, default_value_t = 1_000_000)]
    pub exhaustive_cap: u128,
    /// Largest independence gap reported as "passed".
    #[arg(long, default_value_t = 0.0)]
    pub assumption_tol: f64,
    /// Include wall-clock time in the report (makes it nondeterministic).
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub caps: CapArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated column names (dataset input).
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    /// Edge-list graph; evaluates the exact reduction instance instead of a dataset.
    #[arg(long, conflicts_with = "dataset")]
    pub graph: Option<PathBuf>,
    /// Comma-separated vertex ids (graph input).
    #[arg(long, value_delimiter = ',')]
    pub subset: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub caps: CapArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Complete,
    Path,
    Cycle,
    Star,
    Gnp,
}

#[derive(Args, Clone, Debug)]
pub struct GenHardArgs {
    /// Edge-list graph file.
    #[arg(long, conflicts_with = "family")]
    pub graph: Option<PathBuf>,
    /// Generated graph family instead of a file.
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Edge probability for the gnp family.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write instance rows here: the exact weighted rows, or a sample with --sample.
    #[arg(long)]
    pub rows_out: Option<PathBuf>,
    /// Draw this many i.i.d. rows instead of writing the exact distribution.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Comma-separated vertex ids to verify the reduction identities on.
    #[arg(long, value_delimiter = ',')]
    pub subset: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instances per section.
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Instances for the inverse Fourier section (capped by --trials).
    #[arg(long, default_value_t = 20)]
    pub fourier_trials: u64,
    /// Bound for float evaluations of the lemma left-hand sides.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Negate the closed-form transform so the suite must fail.
    #[arg(long, hide = true)]
    pub corrupt_m_tilde: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("CROSSGREED_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("CROSSGREED_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<crossgreed::Error>() {
        Some(e) if e.is_capacity() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Search(a) => commands::search(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::GenHard(a) => commands::gen_hard(&a),
        Command::VerifyTheory(a) => commands::verify_theory(&a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Tailored mutant generation, selection and coupling analysis for MiniLang.
#[derive(Debug, Parser)]
#[command(name = "tailmut", version)]
pub struct Cli {
    /// key=value file; flags override its entries
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for every output file
    #[arg(long, global = true, default_value = "tailmut-out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the mutant pool of a program
    Mutate(MutateArgs),
    /// Choose a budget of mutants from a pool
    Select(SelectArgs),
    /// Run defect bundles' tests against their mutants and report coupling
    Analyze(AnalyzeArgs),
    /// Effectiveness of selection policies over a budget grid
    Curve(CurveArgs),
    /// Write the control-flow graphs of a program as Graphviz files
    CfgDump(CfgDumpArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Extra .mini files or directories for the trigram index and the language model
    #[arg(long)]
    pub corpus: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LmArgs {
    #[arg(long)]
    pub lm_order: Option<String>,
    /// Train the language model on the corpus only
    #[arg(long)]
    pub lm_exclude_self: bool,
    /// inclusive | conventional
    #[arg(long)]
    pub lm_window: Option<String>,
}

#[derive(Debug, Args)]
pub struct MutateArgs {
    pub program: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// traditional | tailored | all
    #[arg(long)]
    pub operators: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    pub program: PathBuf,
    /// Pool written by `mutate`
    #[arg(long)]
    pub pool: PathBuf,
    /// random | rand-loc | min-dist | min-dist-nat | min-dist-oracle
    #[arg(long)]
    pub policy: Option<String>,
    /// Fraction of the pool (e.g. 0.1) or a mutant count (e.g. 12)
    #[arg(long)]
    pub budget: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// coupling.json from `analyze`, or one mutant id per line; needed by min-dist-oracle
    #[arg(long)]
    pub coupling: Option<PathBuf>,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub lm: LmArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Defect bundle directories, or directories holding bundles
    #[arg(required = true)]
    pub defects: Vec<PathBuf>,
    /// Analyze this pool instead of generating one (single defect only)
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Analyze only the mutants of this plan; needs --pool
    #[arg(long, requires = "pool")]
    pub plan: Option<PathBuf>,
    /// Report only this scope: class | method | line
    #[arg(long)]
    pub scope: Option<String>,
    #[arg(long)]
    pub operators: Option<String>,
    #[arg(long)]
    pub step_limit: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub lm: LmArgs,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Defect bundle directories, or directories holding bundles
    #[arg(required = true)]
    pub defects: Vec<PathBuf>,
    /// Repeatable; default random and min-dist-nat
    #[arg(long)]
    pub policy: Vec<String>,
    /// Repeatable operator sets; default all
    #[arg(long)]
    pub operators: Vec<String>,
    /// class | method | line
    #[arg(long)]
    pub scope: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Grid points; budgets are i/steps for i in 1..=steps
    #[arg(long)]
    pub budget_steps: Option<String>,
    #[arg(long)]
    pub step_limit: Option<String>,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub lm: LmArgs,
}

#[derive(Debug, Args)]
pub struct CfgDumpArgs {
    pub program: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(tailmut::Error),
}

impl From<tailmut::Error> for CliError {
    fn from(e: tailmut::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use tailmut::Error as E;
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e {
                E::BaselineFailure { .. } => 3,
                E::InvalidParameter(_) | E::Io { .. } | E::NoDefects => 1,
                _ => 2,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tailmut: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

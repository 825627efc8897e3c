use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chronoqa_core::eval::ReportFormat;
use chronoqa_core::memory::MemoryMode;
use chronoqa_core::reasoner::Strategy;

mod backend;
mod commands;
mod config;
mod error;

use config::{BackendKind, FileConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "chronoqa", version, about = "Temporal question answering over multi-session dialogues")]
struct Cli {
    /// TOML run file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Maximum number of questions or sessions processed at once.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Zero wall-clock fields so repeated runs write identical files.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(flatten)]
    gateway: GatewayArgs,
    #[command(subcommand)]
    command: Commands,
}

#[derive(Args, Debug, Clone, Default)]
struct GatewayArgs {
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendKind>,
    /// Fixture directory read by replay and written by record.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    /// JSON rule file for the scripted backend.
    #[arg(long, global = true)]
    script: Option<PathBuf>,
    /// Requests per minute for the live backend.
    #[arg(long, global = true)]
    rate_limit: Option<u32>,
    /// Fixed `recorded_at` value for newly recorded fixtures.
    #[arg(long, global = true)]
    record_timestamp: Option<String>,
}

#[derive(Subcommand)]
enum Commands {
    /// Build a memory pool from a dialogue corpus.
    Memorize {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        mode: Option<MemoryMode>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Answer a benchmark with one strategy and score it.
    Eval(EvalArgs),
    /// Draft a benchmark from a corpus, or import a reviewed draft.
    BuildBench {
        #[command(subcommand)]
        step: BenchStep,
    },
    /// Run a TEL program and print its trace and value.
    ExecTel {
        #[arg(long)]
        program: PathBuf,
        /// JSON object mapping names to dates or tagged values.
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long, default_value_t = chronoqa_core::tel::DEFAULT_STEP_BUDGET)]
        budget: usize,
    },
    /// Score an existing answer log.
    Report {
        #[arg(long)]
        answers: PathBuf,
        #[arg(long)]
        benchmark: Option<PathBuf>,
        #[arg(long, default_value = "text")]
        format: ReportFormat,
    },
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    benchmark: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    memory: Option<PathBuf>,
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Output directory for answers.jsonl and the report.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "text")]
    format: ReportFormat,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    retries: Option<usize>,
    #[arg(long)]
    context_tokens: Option<usize>,
}

#[derive(Subcommand)]
enum BenchStep {
    /// Extract events, link them and draft questions for review.
    Draft {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Questions per type; the defaults follow the reference benchmark.
        #[arg(long, default_value_t = 264)]
        ta: usize,
        #[arg(long, default_value_t = 102)]
        tp: usize,
        #[arg(long, default_value_t = 234)]
        ti: usize,
        #[arg(long, default_value_t = commands::DEFAULT_UNANSWERABLE_FRACTION)]
        unanswerable_fraction: f64,
    },
    /// Turn a reviewed file into a benchmark.
    Import {
        #[arg(long)]
        review: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let jobs = cli.jobs.or(file.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let ctx = commands::Context { file, gateway: cli.gateway, jobs, deterministic: cli.deterministic };
    pool.install(|| match cli.command {
        Commands::Memorize { corpus, mode, out } => commands::memorize(&ctx, corpus, mode, out),
        Commands::Eval(a) => commands::eval(&ctx, a),
        Commands::BuildBench { step: BenchStep::Draft { corpus, out, ta, tp, ti, unanswerable_fraction } } => {
            commands::draft(&ctx, corpus, out, chronoqa_core::bench::Targets { ta, tp, ti }, unanswerable_fraction)
        }
        Commands::BuildBench { step: BenchStep::Import { review, out } } => commands::import(review, out),
        Commands::ExecTel { program, env, budget } => commands::exec_tel(program, env, budget),
        Commands::Report { answers, benchmark, format } => commands::report(&ctx, answers, benchmark, format),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

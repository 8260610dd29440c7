//! Command-line front end.
//!
//! Every command writes into an output directory, replaces files atomically,
//! and finishes with a `<command>.manifest.json` recording inputs, flags,
//! seed, version and output hashes. Exit codes: 0 success, 1 internal error,
//! 2 input or validation error.

mod commands;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::fusion::Corruption;
use crate::triage::DEFAULT_BEST_STYLES;

pub use commands::{
    cmd_demo, cmd_eval_explain, cmd_explain, cmd_ingest, cmd_report, cmd_score, cmd_triage, files, narratives_text,
    report_markdown, run_explain, CorpusCommand, DemoCommand, ExplainFailure, ExplainOptions, ExplainRun,
    ExplainSummary,
};
pub use output::{sha256_hex, write_atomic, InputFile, OutputDir, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "caption-xray", version, about = "Caption metrics, triage and error attribution")]
struct Cli {
    /// Worker threads for per-record work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// JSON-lines corpus.
    #[arg(long)]
    corpus: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    /// Number of best styles whose generations serve as alternates.
    #[arg(long, default_value_t = DEFAULT_BEST_STYLES)]
    best_styles: usize,
    /// Count only the first suspect as a correct prediction.
    #[arg(long)]
    strict: bool,
}

impl ExplainArgs {
    fn options(&self) -> ExplainOptions {
        ExplainOptions {
            best_styles: self.best_styles,
            strict: self.strict,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a corpus and write a normalized copy with a summary.
    Ingest(CorpusArgs),
    /// BLEU-1..4, ROUGE-L, CIDEr and unique-word counts.
    Score(CorpusArgs),
    /// Low performers below the median BLEU-1 and the best styles.
    Triage {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = DEFAULT_BEST_STYLES)]
        best_styles: usize,
    },
    /// Explain every low performer; adds accuracy when labels exist.
    Explain {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        explain: ExplainArgs,
    },
    /// Accuracy of the explanations against error labels.
    EvalExplain {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        explain: ExplainArgs,
    },
    /// Score, triage and explain in one run, with a Markdown summary.
    Report {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        explain: ExplainArgs,
    },
    /// Train the toy decoder, generate a corrupted synthetic corpus, and
    /// run the full report on it.
    Demo {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Overwrite existing outputs.
        #[arg(long)]
        force: bool,
        /// Records to generate.
        #[arg(long, default_value_t = 20)]
        size: usize,
        /// none, caption, style, resnext or mixed.
        #[arg(long, default_value_t = Corruption::Mixed)]
        corruption: Corruption,
        #[command(flatten)]
        explain: ExplainArgs,
    },
}

fn corpus_cmd(a: &CorpusArgs, seed: u64, jobs: Option<usize>) -> CorpusCommand<'_> {
    CorpusCommand {
        corpus: a.corpus.as_path(),
        out: a.out.as_path(),
        force: a.force,
        seed,
        jobs,
    }
}

fn dispatch(cli: &Cli) -> Result<RunManifest> {
    let (seed, jobs) = (cli.seed, cli.jobs);
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(&corpus_cmd(a, seed, jobs)),
        Command::Score(a) => cmd_score(&corpus_cmd(a, seed, jobs)),
        Command::Triage { corpus, best_styles } => cmd_triage(&corpus_cmd(corpus, seed, jobs), *best_styles),
        Command::Explain { corpus, explain } => cmd_explain(&corpus_cmd(corpus, seed, jobs), explain.options()),
        Command::EvalExplain { corpus, explain } => cmd_eval_explain(&corpus_cmd(corpus, seed, jobs), explain.options()),
        Command::Report { corpus, explain } => cmd_report(&corpus_cmd(corpus, seed, jobs), explain.options()),
        Command::Demo {
            out,
            force,
            size,
            corruption,
            explain,
        } => cmd_demo(&DemoCommand {
            out,
            force: *force,
            seed,
            jobs,
            size: *size,
            corruption: *corruption,
            explain: explain.options(),
        }),
    }
}

fn execute(cli: &Cli) -> Result<RunManifest> {
    match cli.jobs {
        None => dispatch(cli),
        Some(0) => Err(Error::Argument("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Argument(format!("cannot start {n} worker threads: {e}")))?
            .install(|| dispatch(cli)),
    }
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_INTERNAL
    }
}

/// Parses `args` (program name first), runs the command, reports errors on
/// stderr, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

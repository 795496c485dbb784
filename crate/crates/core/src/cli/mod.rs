//! The `curate` command line: one subcommand per pipeline step plus a combined
//! `pipeline` run. Settings come from an optional JSON config file and are
//! overridden by flags.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on invalid configuration.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use config::{CkptSection, DedupSection, ErrorMode, FilterSection, PackSection, PipelineConfig, ReportSection, Stage};
pub use commands::{AnyTokenizer, ReadCounters, StageCounters};
pub use output::{RunManifest, Staging, MANIFEST_FILE};

use crate::corpus_io::Partition;
use crate::quality::Granularity;

#[derive(Debug, Parser)]
#[command(name = "curate", version, about = "Curate web-text corpora and analyse training runs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Token histograms, partition totals and top domains.
    Stats,
    /// Paragraph-level deduplication with an audit log of removals.
    Dedup,
    /// Partition selection and the token-to-word ratio filter.
    Filter,
    /// Train a byte-level BPE tokenizer.
    TrainTokenizer,
    /// Fertility (tokens per word) of one or more tokenizers.
    Fertility,
    /// Most frequent tokens of a tokenizer over a corpus.
    TokenFreq,
    /// Pack documents into fixed-length rows and log the data order.
    Pack,
    /// Trend, ANOVA, pairwise and plateau statistics over score tables.
    Progress,
    /// Average checkpoints stored as LLWC containers or raw tensor directories.
    AvgCkpt,
    /// Dedup, filter and stats in one pass.
    Pipeline,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Stats => "stats",
            Command::Dedup => "dedup",
            Command::Filter => "filter",
            Command::TrainTokenizer => "train-tokenizer",
            Command::Fertility => "fertility",
            Command::TokenFreq => "token-freq",
            Command::Pack => "pack",
            Command::Progress => "progress",
            Command::AvgCkpt => "avg-ckpt",
            Command::Pipeline => "pipeline",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Input files, directories or glob patterns (repeatable).
    #[arg(long, global = true)]
    pub input: Vec<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Sequential single-pass processing with byte-identical outputs across runs.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Partition for every input, instead of inferring it from file names.
    #[arg(long, global = true)]
    pub partition: Option<Partition>,
    #[arg(long, global = true, value_enum)]
    pub on_error: Option<ErrorMode>,
    /// Pipeline stage order, e.g. `dedup,filter,stats`.
    #[arg(long, global = true, value_delimiter = ',', value_enum)]
    pub stages: Option<Vec<Stage>>,
    #[arg(long, global = true)]
    pub min_words: Option<usize>,
    #[arg(long, global = true)]
    pub bloom_n: Option<u64>,
    #[arg(long, global = true)]
    pub bloom_fp: Option<f64>,
    /// Lowercase paragraphs before hashing.
    #[arg(long, global = true)]
    pub lowercase: bool,
    /// Drop documents whose paragraphs were all duplicates.
    #[arg(long, global = true)]
    pub drop_emptied: bool,
    /// Also write the Bloom filter as `filter.llbf`.
    #[arg(long, global = true)]
    pub save_filter: bool,
    #[arg(long, global = true)]
    pub ratio_threshold: Option<f64>,
    #[arg(long, global = true)]
    pub granularity: Option<Granularity>,
    /// Comma-separated partitions to keep, e.g. `head,middle`.
    #[arg(long, global = true)]
    pub keep_partitions: Option<String>,
    /// `whitespace`, `chars` or a tokenizer directory (repeatable for fertility).
    #[arg(long, global = true)]
    pub tokenizer: Vec<String>,
    #[arg(long, global = true)]
    pub vocab_size: Option<usize>,
    #[arg(long, global = true)]
    pub max_corpus_bytes: Option<u64>,
    #[arg(long, global = true)]
    pub seq_len: Option<usize>,
    /// Separator token id appended after each packed document.
    #[arg(long, global = true)]
    pub separator: Option<u32>,
    /// Dedup hash seed, or the document shuffle seed for `pack`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    /// Mark documents as duplicates by hashing their text instead of trusting `dup_flag`.
    #[arg(long, global = true)]
    pub recompute_uniqueness: bool,
    /// Report the mean of per-document fertilities instead of the corpus ratio.
    #[arg(long, global = true)]
    pub document_mean: bool,
    #[arg(long, global = true)]
    pub sample_id: Option<String>,
    /// Number of most recent checkpoints to average.
    #[arg(long, global = true)]
    pub window: Option<usize>,
    /// Per-checkpoint weights for a weighted average.
    #[arg(long, global = true, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
}

/// Failures, split by exit code.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Runtime(e) => e,
        }
    }
}

/// Summary of a successful run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub outputs: Vec<String>,
    pub counters: serde_json::Value,
}

/// Resolves the effective config and runs one command.
pub fn run(cli: &Cli) -> Result<RunOutcome, Failure> {
    let mut cfg = match &cli.flags.config {
        Some(path) => PipelineConfig::load(path).map_err(Failure::Config)?,
        None => PipelineConfig::default(),
    };
    cfg.apply_flags(&cli.flags, commands::seed_target(cli.command));
    cfg.validate().map_err(Failure::Config)?;
    commands::dispatch(cli.command, &cfg)
}

/// Parses `args` (including the program name) and runs, mapping the result to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            log::info!("{}: wrote {} files to {}", cli.command.name(), outcome.outputs.len(), outcome.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.exit_code())
        }
    }
}

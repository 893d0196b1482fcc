//! The `discoqad` command line.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage or validation error.

mod commands;
mod config;

pub use config::{ConfigFile, Overrides, RunConfig};

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::decoding::Method;
use crate::error::Result;
use crate::evaluation::Aggregation;
use crate::model::Phenomenon;
use crate::tagger::Side;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "discoqad", version, about = "Quality-aware decoding and discourse evaluation for document-level MT")]
pub struct Cli {
    /// TOML run configuration; command-line flags take precedence over it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads (default: one per CPU). Outputs do not depend on it.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: Option<u16>,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tag discourse phenomena on the reference or hypothesis side.
    Tag(TagArgs),
    /// Select one candidate per pool (MAP, MBR or QE reranking).
    Decode(DecodeArgs),
    /// Corpus BLEU/chrF and per-phenomenon tag F1 for one system.
    Evaluate(EvaluateArgs),
    /// Edit rate of a system against a baseline on tagged sentences.
    EditRate(EditRateArgs),
    /// Agreement between automatic tags and human annotations.
    Overlap(OverlapArgs),
    /// Human preference counts by semantic difference and correctness rates.
    Preferences(PreferencesArgs),
    /// Generate synthetic candidate pools by corrupting references.
    Synth(SynthArgs),
    /// Combine evaluation reports, optionally as a Markdown table.
    Report(ReportArgs),
    /// Cross-check corpus, pool, alignment and annotation files.
    Validate(ValidateArgs),
    /// Serve the deterministic mock scorer over HTTP.
    MockScorer(MockScorerArgs),
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output file (default: standard output).
    #[arg(short, long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TagArgs {
    /// Corpus JSONL.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Lexicon TOML (default: the bundled lexicon for each target language).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Word alignments (JSONL) between source and the tagged side; a
    /// position heuristic is used when absent.
    #[arg(long)]
    pub alignments: Option<PathBuf>,
    #[arg(long, default_value = "reference")]
    pub side: Side,
    /// Hypothesis texts (JSONL with doc_id, index, text); required for
    /// `--side hypothesis`.
    #[arg(long)]
    pub hypotheses: Option<PathBuf>,
    /// Tag lexical cohesion when an aligned pair occurs more than N times.
    #[arg(long, value_name = "N")]
    pub threshold: Option<usize>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Candidate pools JSONL.
    #[arg(long)]
    pub pools: PathBuf,
    #[arg(long, default_value = "mbr")]
    pub method: Method,
    /// MBR utility: bleu, chrf, lc, lc_raw or external:<name>.
    #[arg(long)]
    pub utility: Option<String>,
    /// Compare each candidate with itself too in MBR (`--include-self=false` to disable).
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub include_self: Option<bool>,
    /// Corpus JSONL, supplying source sentences and document context to utilities.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Previous source sentences passed as context.
    #[arg(long, value_name = "N")]
    pub context_window: Option<usize>,
    /// Stopword file for the lc utilities, or a bundled language code.
    #[arg(long, value_name = "PATH|LANG")]
    pub stopwords: Option<String>,
    /// Synonym groups TOML for the lc utilities.
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    /// Persistent cache for external scorer results.
    #[arg(long)]
    pub scorer_cache: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// System outputs (JSONL with doc_id, index, text).
    #[arg(long)]
    pub hypotheses: PathBuf,
    /// Reference-side tag file.
    #[arg(long)]
    pub ref_tags: PathBuf,
    /// Hypothesis-side tag file.
    #[arg(long)]
    pub hyp_tags: PathBuf,
    /// System name in the report (default: hypotheses file stem).
    #[arg(long)]
    pub system: Option<String>,
    /// Baseline outputs; adds an edit-rate summary over tagged sentences.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long)]
    pub aggregation: Option<Aggregation>,
    /// Count sentence-initial case-sensitive matches (`=false` to drop them).
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub include_ambiguous: Option<bool>,
    /// Also write the report as Markdown to this path.
    #[arg(long, value_name = "PATH")]
    pub markdown: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct EditRateArgs {
    /// Baseline (e.g. greedy) outputs.
    #[arg(long)]
    pub baseline: PathBuf,
    /// System (e.g. QAD) outputs.
    #[arg(long)]
    pub system: PathBuf,
    /// Reference-side tags selecting the sentences.
    #[arg(long)]
    pub ref_tags: PathBuf,
    /// Restrict to these phenomena (comma-separated; default: any).
    #[arg(long, value_delimiter = ',')]
    pub phenomena: Vec<Phenomenon>,
    #[arg(long)]
    pub aggregation: Option<Aggregation>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub include_ambiguous: Option<bool>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct OverlapArgs {
    /// Automatic tag file.
    #[arg(long)]
    pub tags: PathBuf,
    /// Human annotations JSONL.
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub include_ambiguous: Option<bool>,
    /// Write Markdown instead of JSON.
    #[arg(long)]
    pub markdown: bool,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct PreferencesArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub markdown: bool,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Noise model TOML (default: light drop/duplicate noise).
    #[arg(long)]
    pub noise: Option<PathBuf>,
    #[arg(long)]
    pub num_samples: Option<usize>,
    #[arg(long)]
    pub nucleus_p: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Evaluation report JSON files.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// Render a system × metric × phenomenon Markdown table.
    #[arg(long)]
    pub markdown: bool,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub pools: Option<PathBuf>,
    #[arg(long)]
    pub alignments: Option<PathBuf>,
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct MockScorerArgs {
    #[arg(long, default_value = "127.0.0.1:8765")]
    pub addr: String,
    /// Return this score for every item instead of hash-derived scores.
    #[arg(long)]
    pub fixed: Option<f64>,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs as usize).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    commands::dispatch(cli.command, file)
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_user_error() {
                EXIT_USAGE
            } else {
                EXIT_INTERNAL
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn unknown_flags_are_usage_errors() {
        assert_eq!(run(["discoqad", "tag", "--corpus", "x", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["discoqad", "frobnicate"]), EXIT_USAGE);
    }

    #[test]
    fn missing_input_is_a_usage_error() {
        assert_eq!(run(["discoqad", "tag", "--corpus", "/nonexistent/corpus.jsonl"]), EXIT_USAGE);
    }
}

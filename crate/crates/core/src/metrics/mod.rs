//! Lexical translation metrics compatible with sacreBLEU 2.x.
//!
//! Corpus BLEU follows `nrefs:1|case:mixed|eff:no|tok:13a|smooth:exp` and
//! chrF follows `nrefs:1|case:mixed|eff:yes|nc:6|nw:0|space:no` with
//! beta 2. Sentence-level BLEU, used as an MBR utility, additionally
//! enables effective order so that short identical pairs score 100.
//! The edit rate is tercom's TER with per-operation counts.

mod bleu;
mod chrf;
mod ter;
mod tokenizer;

pub use bleu::{bleu_from_stats, bleu_stats, corpus_bleu, sentence_bleu, BleuStats};
pub use chrf::{chrf, chrf_from_stats, chrf_stats, corpus_chrf, ChrfStats};
pub use ter::{ter_edit_rate, EditRateBreakdown, TER_BEAM_WIDTH, TER_MAX_SHIFT_CANDIDATES};
pub use tokenizer::tokenize_13a;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BleuSmoothing {
    /// NIST geometric sequence smoothing (`smooth:exp`).
    Exp,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BleuTokenizer {
    ThirteenA,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub bleu_max_ngram: usize,
    pub bleu_smoothing: BleuSmoothing,
    pub bleu_tokenizer: BleuTokenizer,
    /// Use effective order for sentence-level BLEU. Corpus BLEU never does.
    pub bleu_sentence_effective_order: bool,
    pub chrf_char_ngram: usize,
    pub chrf_word_ngram: usize,
    pub chrf_beta: f64,
    pub chrf_whitespace: bool,
    /// Longest block a single TER shift may move.
    pub ter_max_shift_size: usize,
    /// Largest start-position offset between the hypothesis block and its
    /// matching reference block.
    pub ter_max_shift_distance: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            bleu_max_ngram: 4,
            bleu_smoothing: BleuSmoothing::Exp,
            bleu_tokenizer: BleuTokenizer::ThirteenA,
            bleu_sentence_effective_order: true,
            chrf_char_ngram: 6,
            chrf_word_ngram: 0,
            chrf_beta: 2.0,
            chrf_whitespace: false,
            ter_max_shift_size: 10,
            ter_max_shift_distance: 50,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bleu_max_ngram == 0 {
            return Err(Error::InvalidArgument("bleu_max_ngram must be >= 1".into()));
        }
        if self.chrf_char_ngram == 0 {
            return Err(Error::InvalidArgument("chrf_char_ngram must be >= 1".into()));
        }
        if !(self.chrf_beta > 0.0) || !self.chrf_beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "chrf_beta must be a positive number, got {}",
                self.chrf_beta
            )));
        }
        if self.ter_max_shift_size == 0 {
            return Err(Error::InvalidArgument("ter_max_shift_size must be >= 1".into()));
        }
        Ok(())
    }

    /// Corpus BLEU signature in sacreBLEU's format (single reference, mixed case).
    pub fn bleu_signature(&self) -> String {
        let smooth = match self.bleu_smoothing {
            BleuSmoothing::Exp => "exp",
            BleuSmoothing::None => "none",
        };
        format!("nrefs:1|case:mixed|eff:no|tok:13a|smooth:{smooth}|version:{SACREBLEU_VERSION}")
    }

    /// chrF signature in sacreBLEU's format.
    pub fn chrf_signature(&self) -> String {
        format!(
            "nrefs:1|case:mixed|eff:yes|nc:{}|nw:{}|space:{}|version:{SACREBLEU_VERSION}",
            self.chrf_char_ngram,
            self.chrf_word_ngram,
            if self.chrf_whitespace { "yes" } else { "no" }
        )
    }
}

/// sacreBLEU release whose scores these implementations reproduce.
pub const SACREBLEU_VERSION: &str = "2.5.1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricWarning {
    /// The reference was empty; the score is defined as 0.
    EmptyReference,
    /// Both hypothesis and reference were empty; the score is defined as 0.
    EmptyInputs,
}

/// A score in `[0, 100]` with a flag for degenerate inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricScore {
    pub score: f64,
    pub warning: Option<MetricWarning>,
}

pub(crate) fn check_lengths(hyps: usize, refs: usize) -> Result<()> {
    if hyps != refs {
        return Err(Error::InvalidArgument(format!(
            "{hyps} hypotheses but {refs} references"
        )));
    }
    if hyps == 0 {
        return Err(Error::InvalidArgument("corpus metric over zero sentences".into()));
    }
    Ok(())
}

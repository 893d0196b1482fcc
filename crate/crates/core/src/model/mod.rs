//! Domain types shared by every stage of the pipeline.
//!
//! `doc_id` plus `sentence_index` is the join key across corpus, pool,
//! alignment, tag, selection and annotation files.

mod io;
mod validate;

pub use io::{
    assemble_corpus, load_alignments, load_annotations, load_candidate_pools, load_corpus,
    load_jsonl, parse_alignments, parse_annotations, parse_candidate_pools, parse_corpus,
    parse_jsonl, to_jsonl_string, write_jsonl, AlignmentRecord, CandidateRecord, CorpusRecord,
    PoolRecord,
};
pub use validate::{validate_experiment, Finding, ValidationReport};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SentenceKey {
    pub doc_id: String,
    pub index: usize,
}

impl SentenceKey {
    pub fn new(doc_id: impl Into<String>, index: usize) -> Self {
        SentenceKey {
            doc_id: doc_id.into(),
            index,
        }
    }
}

impl fmt::Display for SentenceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.doc_id, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LanguagePair {
    source: String,
    target: String,
}

fn valid_lang_code(code: &str) -> bool {
    (2..=3).contains(&code.len()) && code.bytes().all(|b| b.is_ascii_lowercase())
}

impl LanguagePair {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Result<Self> {
        let (source, target) = (source.into(), target.into());
        for code in [&source, &target] {
            if !valid_lang_code(code) {
                return Err(Error::Validation(format!(
                    "language code `{code}` is not 2-3 lowercase ASCII letters"
                )));
            }
        }
        if source == target {
            return Err(Error::Validation(format!(
                "source and target language are both `{source}`"
            )));
        }
        Ok(LanguagePair { source, target })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn target(&self) -> &str {
        &self.target
    }
}

impl fmt::Display for LanguagePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.source, self.target)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentencePair {
    pub index: usize,
    pub source: String,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub lang: LanguagePair,
    pub pairs: Vec<SentencePair>,
}

impl Document {
    pub fn key(&self, index: usize) -> SentenceKey {
        SentenceKey::new(self.doc_id.clone(), index)
    }

    pub fn keys(&self) -> impl Iterator<Item = SentenceKey> + '_ {
        self.pairs.iter().map(|p| self.key(p.index))
    }
}

/// All sentence keys of a corpus in file order.
pub fn corpus_keys(corpus: &[Document]) -> Vec<SentenceKey> {
    corpus.iter().flat_map(Document::keys).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub text: String,
    /// Natural-log model probability.
    pub model_logprob: Option<f64>,
    pub qe_score: Option<f64>,
}

impl Candidate {
    pub fn new(text: impl Into<String>) -> Self {
        Candidate {
            text: text.into(),
            model_logprob: None,
            qe_score: None,
        }
    }

    pub fn with_logprob(mut self, logprob: f64) -> Self {
        self.model_logprob = Some(logprob);
        self
    }

    pub fn with_qe(mut self, qe: f64) -> Self {
        self.qe_score = Some(qe);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(lp) = self.model_logprob {
            if !(lp <= 0.0) {
                return Err(Error::Validation(format!(
                    "log-probability {lp} is not <= 0"
                )));
            }
        }
        if let Some(qe) = self.qe_score {
            if !qe.is_finite() {
                return Err(Error::Validation(format!("QE score {qe} is not finite")));
            }
        }
        Ok(())
    }
}

/// Candidates for one source sentence, in generation order. The order is
/// significant: every selection rule breaks ties towards the smallest index.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    pub doc_id: String,
    pub sentence_index: usize,
    pub candidates: Vec<Candidate>,
}

impl CandidatePool {
    pub fn new(
        doc_id: impl Into<String>,
        sentence_index: usize,
        candidates: Vec<Candidate>,
    ) -> Result<Self> {
        let pool = CandidatePool {
            doc_id: doc_id.into(),
            sentence_index,
            candidates,
        };
        pool.validate()?;
        Ok(pool)
    }

    /// Pool of bare texts, without log-probabilities or QE scores.
    pub fn from_texts<S: AsRef<str>>(
        doc_id: impl Into<String>,
        sentence_index: usize,
        texts: &[S],
    ) -> Result<Self> {
        Self::new(
            doc_id,
            sentence_index,
            texts.iter().map(|t| Candidate::new(t.as_ref())).collect(),
        )
    }

    pub fn key(&self) -> SentenceKey {
        SentenceKey::new(self.doc_id.clone(), self.sentence_index)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.text.as_str()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::Validation(format!(
                "candidate pool for {} is empty",
                self.key()
            )));
        }
        for (i, c) in self.candidates.iter().enumerate() {
            c.validate().map_err(|e| {
                Error::Validation(format!("{} candidate {i}: {e}", self.key()))
            })?;
        }
        Ok(())
    }
}

/// Word alignment links `(source token, target token)` over whitespace
/// tokenization of the raw sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentSet {
    pub doc_id: String,
    pub sentence_index: usize,
    pub links: Vec<(usize, usize)>,
}

impl AlignmentSet {
    pub fn new(
        doc_id: impl Into<String>,
        sentence_index: usize,
        links: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let set = AlignmentSet {
            doc_id: doc_id.into(),
            sentence_index,
            links,
        };
        let mut seen = BTreeSet::new();
        for link in &set.links {
            if !seen.insert(*link) {
                return Err(Error::Validation(format!(
                    "duplicate alignment link {}-{} in {}",
                    link.0,
                    link.1,
                    set.key()
                )));
            }
        }
        Ok(set)
    }

    pub fn key(&self) -> SentenceKey {
        SentenceKey::new(self.doc_id.clone(), self.sentence_index)
    }

    /// First link whose indices fall outside the given token counts.
    pub fn first_overflow(&self, source_len: usize, target_len: usize) -> Option<(usize, usize)> {
        self.links
            .iter()
            .copied()
            .find(|&(s, t)| s >= source_len || t >= target_len)
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Phenomenon {
    LexicalCohesion,
    Pronouns,
    Formality,
    VerbForm,
}

impl Phenomenon {
    pub const ALL: [Phenomenon; 4] = [
        Phenomenon::LexicalCohesion,
        Phenomenon::Pronouns,
        Phenomenon::Formality,
        Phenomenon::VerbForm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phenomenon::LexicalCohesion => "lexical_cohesion",
            Phenomenon::Pronouns => "pronouns",
            Phenomenon::Formality => "formality",
            Phenomenon::VerbForm => "verb_form",
        }
    }
}

impl fmt::Display for Phenomenon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Phenomenon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Phenomenon::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown phenomenon `{s}` (expected one of lexical_cohesion, pronouns, formality, verb_form)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    Greedy,
    Qad,
    Tie,
}

/// One human judgement of a (greedy, QAD) translation pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanAnnotation {
    pub doc_id: String,
    #[serde(rename = "index")]
    pub sentence_index: usize,
    pub phenomena: BTreeSet<Phenomenon>,
    #[serde(default)]
    pub correct_greedy: BTreeMap<Phenomenon, bool>,
    #[serde(default)]
    pub correct_qad: BTreeMap<Phenomenon, bool>,
    /// Likert scale, 1 (same meaning) to 5.
    pub semantic_difference: u8,
    pub preference: Preference,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

impl HumanAnnotation {
    pub fn key(&self) -> SentenceKey {
        SentenceKey::new(self.doc_id.clone(), self.sentence_index)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.semantic_difference) {
            return Err(Error::Validation(format!(
                "{}: semantic_difference {} outside 1..=5",
                self.key(),
                self.semantic_difference
            )));
        }
        for (label, map) in [("correct_greedy", &self.correct_greedy), ("correct_qad", &self.correct_qad)] {
            if let Some(p) = map.keys().find(|p| !self.phenomena.contains(p)) {
                return Err(Error::Validation(format!(
                    "{}: {label} judges `{p}` which is not among the annotated phenomena",
                    self.key()
                )));
            }
        }
        Ok(())
    }
}

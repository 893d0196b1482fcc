//! System-level reporting: corpus BLEU/chrF, per-phenomenon tag F1,
//! edit-rate analysis on tagged subsets and human-annotation statistics.
//! Every report serializes to canonical JSON (sorted keys).

mod edit_rate;
mod f1;
mod human;

pub use edit_rate::{edit_rate_analysis, join_texts, Aggregation, EditPair, EditRateSummary};
pub use f1::{phenomenon_f1, PhenomenonScore};
pub use human::{
    human_overlap, preference_summary, CorrectnessRate, OverlapEntry, OverlapReport, PreferenceCounts,
    PreferenceSummary,
};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{corpus_bleu, corpus_chrf, MetricConfig};
use crate::model::Document;
use crate::tagger::TaggedSentence;

/// Canonical JSON: object keys sorted, two-space indentation, trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // serde_json's default map is ordered by key, so a round trip through
    // `Value` sorts every object.
    let value = serde_json::to_value(value)?;
    let mut out = serde_json::to_string_pretty(&value)?;
    out.push('\n');
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationScores {
    pub bleu: f64,
    pub chrf: f64,
    pub bleu_signature: String,
    pub chrf_signature: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub documents: usize,
    pub sentences: usize,
    pub include_ambiguous: bool,
    /// Previous sentence pairs the pools were generated with, if known.
    pub context_window: Option<usize>,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub system: String,
    pub translation: TranslationScores,
    /// One entry per phenomenon, including those without tags.
    pub phenomena: Vec<PhenomenonScore>,
    pub edit_rate: Option<EditRateSummary>,
    pub meta: ReportMeta,
}

/// Scores `hypotheses` (one per corpus sentence, in corpus order) against
/// the references and bundles tag F1 from pre-computed tags.
pub fn evaluate_system(
    system: &str,
    corpus: &[Document],
    hypotheses: &[&str],
    reference_tags: &[TaggedSentence],
    hypothesis_tags: &[TaggedSentence],
    config: &MetricConfig,
    include_ambiguous: bool,
) -> Result<EvalReport> {
    config.validate()?;
    let references: Vec<&str> = corpus
        .iter()
        .flat_map(|d| d.pairs.iter().map(|p| p.reference.as_str()))
        .collect();
    if hypotheses.len() != references.len() {
        return Err(Error::Validation(format!(
            "{} hypotheses for {} corpus sentences",
            hypotheses.len(),
            references.len()
        )));
    }
    let phenomena = phenomenon_f1(reference_tags, hypothesis_tags, include_ambiguous)?;
    Ok(EvalReport {
        system: system.to_string(),
        translation: TranslationScores {
            bleu: corpus_bleu(hypotheses, &references, config)?,
            chrf: corpus_chrf(hypotheses, &references, config)?,
            bleu_signature: config.bleu_signature(),
            chrf_signature: config.chrf_signature(),
        },
        phenomena,
        edit_rate: None,
        meta: ReportMeta {
            documents: corpus.len(),
            sentences: references.len(),
            include_ambiguous,
            context_window: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

impl EvalReport {
    pub fn to_canonical_json(&self) -> Result<String> {
        to_canonical_json(self)
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "## {}\n", self.system);
        let _ = writeln!(s, "| metric | score | signature |\n|---|---:|---|");
        let t = &self.translation;
        let _ = writeln!(s, "| BLEU | {:.2} | `{}` |", t.bleu, t.bleu_signature);
        let _ = writeln!(s, "| chrF | {:.2} | `{}` |", t.chrf, t.chrf_signature);
        let _ = writeln!(s, "\n| phenomenon | ref tags | hyp tags | TP | P | R | F1 |\n|---|---:|---:|---:|---:|---:|---:|");
        for p in &self.phenomena {
            let _ = writeln!(
                s,
                "| {}{} | {} | {} | {} | {:.4} | {} | {:.4} |",
                p.phenomenon,
                if p.vacuous { " (no tags)" } else { "" },
                p.ref_tag_count,
                p.hyp_tag_count,
                p.true_positives,
                p.precision,
                opt(p.recall),
                p.f1
            );
        }
        if let Some(e) = &self.edit_rate {
            let b = &e.breakdown;
            let _ = writeln!(
                s,
                "\nEdit rate vs. baseline ({}, {} sentences): {:.4} — {} ins, {} del, {} sub, {} shift over {} words",
                e.aggregation, e.sentences, b.rate, b.insertions, b.deletions, b.substitutions, b.shifts, b.reference_length
            );
        }
        let _ = writeln!(s, "\n{} documents, {} sentences", self.meta.documents, self.meta.sentences);
        s
    }
}

impl OverlapReport {
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| phenomenon | human | both | overlap |\n|---|---:|---:|---:|\n");
        for (p, e) in &self.phenomena {
            let _ = writeln!(s, "| {p} | {} | {} | {} |", e.human_tagged, e.both_tagged, opt(e.ratio));
        }
        let _ = writeln!(s, "\n{} joined, {} unjoined annotations", self.joined, self.unjoined);
        s
    }
}

impl PreferenceSummary {
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| semantic difference | greedy | qad | tie |\n|---:|---:|---:|---:|\n");
        for (b, c) in &self.by_difference {
            let _ = writeln!(s, "| {b} | {} | {} | {} |", c.greedy, c.qad, c.tie);
        }
        if !self.correctness.is_empty() {
            s.push_str("\n| phenomenon | judged | greedy correct | qad correct |\n|---|---:|---:|---:|\n");
            for (p, c) in &self.correctness {
                let _ = writeln!(s, "| {p} | {} | {:.4} | {:.4} |", c.judged, c.greedy_rate, c.qad_rate);
            }
        }
        s
    }
}

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ter_edit_rate, EditRateBreakdown, MetricConfig};
use crate::model::{Phenomenon, SentenceKey};
use crate::tagger::{tagged_keys, TaggedSentence};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Sum edits and baseline lengths over sentences, then divide.
    #[default]
    Pooled,
    /// Average the per-sentence rates; counts are still summed.
    Mean,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" => Ok(Aggregation::Pooled),
            "mean" => Ok(Aggregation::Mean),
            _ => Err(Error::InvalidArgument(format!("unknown aggregation `{s}` (expected pooled or mean)"))),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Pooled => "pooled",
            Aggregation::Mean => "mean",
        })
    }
}

/// Edit statistics of a system against a baseline over a tagged subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditRateSummary {
    pub aggregation: Aggregation,
    /// Phenomena used to select sentences; empty means any phenomenon.
    pub phenomena: Vec<Phenomenon>,
    pub sentences: usize,
    pub breakdown: EditRateBreakdown,
}

/// One sentence's baseline and system output.
#[derive(Debug, Clone, Copy)]
pub struct EditPair<'a> {
    pub key: &'a SentenceKey,
    pub baseline: &'a str,
    pub system: &'a str,
}

/// TER-style edits needed to turn the system output into the baseline,
/// restricted to sentences whose reference carries a tag of one of
/// `filter` (any phenomenon when empty).
pub fn edit_rate_analysis(
    pairs: &[EditPair<'_>],
    reference_tags: &[TaggedSentence],
    filter: &BTreeSet<Phenomenon>,
    aggregation: Aggregation,
    include_ambiguous: bool,
    config: &MetricConfig,
) -> Result<EditRateSummary> {
    let selected = tagged_keys(reference_tags, filter, include_ambiguous);
    let chosen: Vec<&EditPair<'_>> = pairs.iter().filter(|p| selected.contains(p.key)).collect();
    if chosen.is_empty() {
        let which = if filter.is_empty() {
            "any phenomenon".to_string()
        } else {
            filter.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", ")
        };
        return Err(Error::Validation(format!("no tagged sentences matched the filter ({which})")));
    }

    let per_sentence: Vec<EditRateBreakdown> = chosen
        .par_iter()
        .map(|p| {
            ter_edit_rate(p.system, p.baseline, config).map_err(|e| match e {
                Error::InvalidArgument(m) | Error::Validation(m) => Error::Validation(format!("{}: {m}", p.key)),
                other => other,
            })
        })
        .collect::<Result<_>>()?;

    let mut breakdown = EditRateBreakdown::pooled(&per_sentence);
    if aggregation == Aggregation::Mean {
        breakdown.rate = per_sentence.iter().map(|b| b.rate).sum::<f64>() / per_sentence.len() as f64;
    }
    Ok(EditRateSummary {
        aggregation,
        phenomena: filter.iter().copied().collect(),
        sentences: per_sentence.len(),
        breakdown,
    })
}

/// Pairs keys with texts from two key → text maps, in key order. Keys
/// missing from either map are an error.
pub fn join_texts<'a>(
    baseline: &'a BTreeMap<SentenceKey, String>,
    system: &'a BTreeMap<SentenceKey, String>,
) -> Result<Vec<EditPair<'a>>> {
    if let Some(k) = baseline.keys().find(|k| !system.contains_key(*k)) {
        return Err(Error::Validation(format!("{k} has a baseline output but no system output")));
    }
    if let Some(k) = system.keys().find(|k| !baseline.contains_key(*k)) {
        return Err(Error::Validation(format!("{k} has a system output but no baseline output")));
    }
    Ok(baseline
        .iter()
        .map(|(key, b)| EditPair {
            key,
            baseline: b,
            system: &system[key],
        })
        .collect())
}

//! Candidate selection over a pool: MAP (highest model log-probability),
//! MBR (highest expected utility against the other candidates used as
//! pseudo-references) and QE reranking. Every rule breaks ties towards the
//! smallest candidate index.

mod nucleus;
mod synth;

pub use nucleus::{nucleus_truncate, sample_index};
pub use synth::{sentence_seed, synth_candidates, synth_pool, Confusion, NoiseModel, SamplerConfig};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CandidatePool;

/// Side information a utility may use besides the two texts.
#[derive(Debug, Clone, Copy, Default)]
pub struct UtilityContext<'a> {
    pub source: Option<&'a str>,
    /// Preceding source sentences of the document, oldest first.
    pub context: Option<&'a [String]>,
}

/// A failed pair inside a batch evaluation.
#[derive(Debug)]
pub struct PairFailure {
    pub index: usize,
    pub error: Error,
}

/// Similarity `u(hypothesis, pseudo_reference)`; higher is better.
/// Implementations must be pure and return finite values.
pub trait Utility: Send + Sync {
    fn name(&self) -> &str;

    fn evaluate(&self, hypothesis: &str, pseudo_reference: &str, ctx: &UtilityContext<'_>) -> Result<f64>;

    /// Scores `(hypothesis, pseudo_reference)` pairs, returning values in
    /// input order. The default evaluates pairs in parallel; on failure the
    /// lowest failing index is reported.
    fn evaluate_pairs(
        &self,
        pairs: &[(&str, &str)],
        ctx: &UtilityContext<'_>,
    ) -> Result<Vec<f64>, PairFailure> {
        let results: Vec<Result<f64>> = pairs
            .par_iter()
            .map(|(h, r)| self.evaluate(h, r, ctx))
            .collect();
        results
            .into_iter()
            .enumerate()
            .map(|(index, r)| r.map_err(|error| PairFailure { index, error }))
            .collect()
    }
}

pub type UtilityFunction = Arc<dyn Utility>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Map,
    Mbr,
    Rerank,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Map => "map",
            Method::Mbr => "mbr",
            Method::Rerank => "rerank",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "map" => Ok(Method::Map),
            "mbr" => Ok(Method::Mbr),
            "rerank" => Ok(Method::Rerank),
            _ => Err(Error::InvalidArgument(format!(
                "unknown method `{s}` (expected map, mbr or rerank)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub chosen_index: usize,
    pub chosen_text: String,
    /// One value per candidate, present for MBR.
    pub expected_utilities: Option<Vec<f64>>,
    pub method: Method,
}

/// Selections file record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub doc_id: String,
    pub index: usize,
    pub method: Method,
    pub chosen_index: usize,
    pub text: String,
}

impl SelectionRecord {
    pub fn new(pool: &CandidatePool, result: &SelectionResult) -> Self {
        SelectionRecord {
            doc_id: pool.doc_id.clone(),
            index: pool.sentence_index,
            method: result.method,
            chosen_index: result.chosen_index,
            text: result.chosen_text.clone(),
        }
    }
}

/// How the utility matrix is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Cell by cell through [`Utility::evaluate`].
    Serial,
    /// One [`Utility::evaluate_pairs`] call over all cells.
    #[default]
    Batched,
}

/// Smallest index attaining the maximum.
pub fn argmax_first(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            Some(b) if scores[b] >= s => {}
            _ => best = Some(i),
        }
    }
    best
}

fn selection(pool: &CandidatePool, scores: &[f64], method: Method) -> SelectionResult {
    let chosen_index = argmax_first(scores).expect("pool is nonempty");
    SelectionResult {
        chosen_index,
        chosen_text: pool.candidates[chosen_index].text.clone(),
        expected_utilities: None,
        method,
    }
}

pub fn map_select(pool: &CandidatePool) -> Result<SelectionResult> {
    pool.validate()?;
    let logprobs = pool
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.model_logprob.ok_or_else(|| {
                Error::Validation(format!("{}: candidate {i} has no log-probability", pool.key()))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(selection(pool, &logprobs, Method::Map))
}

pub fn rerank_select(pool: &CandidatePool) -> Result<SelectionResult> {
    pool.validate()?;
    let qe = pool
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.qe_score.ok_or_else(|| {
                Error::Validation(format!("{}: candidate {i} has no QE score", pool.key()))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(selection(pool, &qe, Method::Rerank))
}

/// Mean utility of each candidate against the pool. With
/// `include_self = false` a candidate is not compared with itself, and a
/// single-candidate pool gets utility 0.
pub fn expected_utilities(
    pool: &CandidatePool,
    utility: &dyn Utility,
    include_self: bool,
    ctx: &UtilityContext<'_>,
) -> Result<Vec<f64>> {
    expected_utilities_with(pool, utility, include_self, ctx, Execution::Batched)
}

pub fn expected_utilities_with(
    pool: &CandidatePool,
    utility: &dyn Utility,
    include_self: bool,
    ctx: &UtilityContext<'_>,
    execution: Execution,
) -> Result<Vec<f64>> {
    pool.validate()?;
    let n = pool.len();
    let texts = pool.texts();
    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| include_self || i != j)
        .collect();

    let fail = |(row, col): (usize, usize), error: Error| Error::Utility {
        utility: utility.name().to_string(),
        row,
        col,
        message: error.to_string(),
    };

    let values = match execution {
        Execution::Serial => cells
            .iter()
            .map(|&(i, j)| utility.evaluate(texts[i], texts[j], ctx).map_err(|e| fail((i, j), e)))
            .collect::<Result<Vec<_>>>()?,
        Execution::Batched => {
            let pairs: Vec<(&str, &str)> = cells.iter().map(|&(i, j)| (texts[i], texts[j])).collect();
            utility
                .evaluate_pairs(&pairs, ctx)
                .map_err(|f| fail(cells[f.index], f.error))?
        }
    };

    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(fail(cells[k], Error::InvalidArgument(format!("non-finite value {}", values[k]))));
    }

    let per_row = if include_self { n } else { n - 1 };
    if per_row == 0 {
        return Ok(vec![0.0]);
    }
    Ok(values
        .chunks(per_row)
        .map(|row| row.iter().sum::<f64>() / per_row as f64)
        .collect())
}

pub fn mbr_select(
    pool: &CandidatePool,
    utility: &dyn Utility,
    include_self: bool,
    ctx: &UtilityContext<'_>,
) -> Result<SelectionResult> {
    let eu = expected_utilities(pool, utility, include_self, ctx)?;
    let mut result = selection(pool, &eu, Method::Mbr);
    result.expected_utilities = Some(eu);
    Ok(result)
}

/// Dispatches on `method`; `utility` is only consulted for MBR.
pub fn select(
    pool: &CandidatePool,
    method: Method,
    utility: Option<&dyn Utility>,
    include_self: bool,
    ctx: &UtilityContext<'_>,
) -> Result<SelectionResult> {
    match method {
        Method::Map => map_select(pool),
        Method::Rerank => rerank_select(pool),
        Method::Mbr => {
            let utility = utility.ok_or_else(|| {
                Error::InvalidArgument("MBR selection needs a utility function".into())
            })?;
            mbr_select(pool, utility, include_self, ctx)
        }
    }
}

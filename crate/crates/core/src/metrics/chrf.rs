use std::collections::HashMap;
use std::hash::Hash;

use super::{check_lengths, MetricConfig, MetricScore, MetricWarning};
use crate::error::Result;
use crate::text::{is_py_whitespace, split_whitespace};

/// `[hyp, ref, match]` counts per n-gram order: character orders first,
/// then word orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChrfStats(pub Vec<[usize; 3]>);

const PUNCTUATION: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

fn counts<K: Hash + Eq>(items: impl Iterator<Item = K>) -> HashMap<K, usize> {
    let mut map = HashMap::new();
    for k in items {
        *map.entry(k).or_insert(0) += 1;
    }
    map
}

fn match_stats<K: Hash + Eq>(hyp: &HashMap<K, usize>, reference: &HashMap<K, usize>) -> [usize; 3] {
    let mut hyp_count = 0;
    let mut matched = 0;
    for (gram, &c) in hyp {
        hyp_count += c;
        if let Some(&rc) = reference.get(gram) {
            matched += c.min(rc);
        }
    }
    let ref_count = reference.values().sum();
    // hypothesis n-grams only count when the reference has any of that order
    [if reference.is_empty() { 0 } else { hyp_count }, ref_count, matched]
}

fn char_sequence(text: &str, whitespace: bool) -> Vec<char> {
    if whitespace {
        text.chars().collect()
    } else {
        text.chars().filter(|&c| !is_py_whitespace(c)).collect()
    }
}

/// Words with one leading or trailing punctuation mark split off.
fn chrf_words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for w in split_whitespace(text) {
        let chars: Vec<char> = w.chars().collect();
        if chars.len() == 1 {
            out.push(w.to_string());
        } else if PUNCTUATION.contains(chars[chars.len() - 1]) {
            out.push(chars[..chars.len() - 1].iter().collect());
            out.push(chars[chars.len() - 1].to_string());
        } else if PUNCTUATION.contains(chars[0]) {
            out.push(chars[0].to_string());
            out.push(chars[1..].iter().collect());
        } else {
            out.push(w.to_string());
        }
    }
    out
}

pub fn chrf_stats(hypothesis: &str, reference: &str, config: &MetricConfig) -> ChrfStats {
    let hc = char_sequence(hypothesis, config.chrf_whitespace);
    let rc = char_sequence(reference, config.chrf_whitespace);
    let mut stats = Vec::with_capacity(config.chrf_char_ngram + config.chrf_word_ngram);
    for n in 1..=config.chrf_char_ngram {
        let h = counts(hc.windows(n));
        let r = counts(rc.windows(n));
        stats.push(match_stats(&h, &r));
    }
    if config.chrf_word_ngram > 0 {
        let hw = chrf_words(hypothesis);
        let rw = chrf_words(reference);
        for n in 1..=config.chrf_word_ngram {
            let h = counts(hw.windows(n));
            let r = counts(rw.windows(n));
            stats.push(match_stats(&h, &r));
        }
    }
    ChrfStats(stats)
}

/// F-beta over precision and recall averaged across the orders where both
/// sides have n-grams.
pub fn chrf_from_stats(stats: &ChrfStats, beta: f64) -> f64 {
    const EPS: f64 = 1e-16;
    let factor = beta * beta;
    let mut avg_prec = 0.0;
    let mut avg_rec = 0.0;
    let mut effective = 0usize;
    for &[n_hyp, n_ref, n_match] in &stats.0 {
        let prec = if n_hyp > 0 { n_match as f64 / n_hyp as f64 } else { EPS };
        let rec = if n_ref > 0 { n_match as f64 / n_ref as f64 } else { EPS };
        if n_hyp > 0 && n_ref > 0 {
            avg_prec += prec;
            avg_rec += rec;
            effective += 1;
        }
    }
    if effective == 0 {
        return 0.0;
    }
    avg_prec /= effective as f64;
    avg_rec /= effective as f64;
    if avg_prec + avg_rec == 0.0 {
        return 0.0;
    }
    100.0 * (1.0 + factor) * avg_prec * avg_rec / (factor * avg_prec + avg_rec)
}

pub fn chrf(hypothesis: &str, reference: &str, config: &MetricConfig) -> MetricScore {
    let score = chrf_from_stats(&chrf_stats(hypothesis, reference, config), config.chrf_beta);
    let empty = |s: &str| s.chars().all(is_py_whitespace);
    let warning = match (empty(hypothesis), empty(reference)) {
        (true, true) => Some(MetricWarning::EmptyInputs),
        (false, true) => Some(MetricWarning::EmptyReference),
        _ => None,
    };
    MetricScore { score, warning }
}

pub fn corpus_chrf<H: AsRef<str>, R: AsRef<str>>(
    hypotheses: &[H],
    references: &[R],
    config: &MetricConfig,
) -> Result<f64> {
    check_lengths(hypotheses.len(), references.len())?;
    let orders = config.chrf_char_ngram + config.chrf_word_ngram;
    let mut pooled = ChrfStats(vec![[0; 3]; orders]);
    for (h, r) in hypotheses.iter().zip(references) {
        let s = chrf_stats(h.as_ref(), r.as_ref(), config);
        for (acc, x) in pooled.0.iter_mut().zip(&s.0) {
            for k in 0..3 {
                acc[k] += x[k];
            }
        }
    }
    Ok(chrf_from_stats(&pooled, config.chrf_beta))
}

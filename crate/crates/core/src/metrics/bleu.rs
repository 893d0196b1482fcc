use std::collections::HashMap;
use std::ops::AddAssign;

use super::{check_lengths, tokenize_13a, BleuSmoothing, MetricConfig, MetricScore, MetricWarning};
use crate::error::Result;
use crate::text::is_py_whitespace;

/// Sufficient statistics for BLEU; corpus scores pool these before the
/// geometric mean.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BleuStats {
    pub sys_len: usize,
    pub ref_len: usize,
    pub correct: Vec<usize>,
    pub total: Vec<usize>,
}

impl BleuStats {
    pub fn zero(max_order: usize) -> Self {
        BleuStats {
            sys_len: 0,
            ref_len: 0,
            correct: vec![0; max_order],
            total: vec![0; max_order],
        }
    }
}

impl AddAssign<&BleuStats> for BleuStats {
    fn add_assign(&mut self, rhs: &BleuStats) {
        self.sys_len += rhs.sys_len;
        self.ref_len += rhs.ref_len;
        for (a, b) in self.correct.iter_mut().zip(&rhs.correct) {
            *a += b;
        }
        for (a, b) in self.total.iter_mut().zip(&rhs.total) {
            *a += b;
        }
    }
}

fn ngram_counts(tokens: &[String], max_order: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for n in 1..=max_order.min(tokens.len()) {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn stats_from_tokens(hyp: &[String], reference: &[String], max_order: usize) -> BleuStats {
    let hyp_counts = ngram_counts(hyp, max_order);
    let ref_counts = ngram_counts(reference, max_order);
    let mut stats = BleuStats::zero(max_order);
    stats.sys_len = hyp.len();
    stats.ref_len = reference.len();
    for (gram, &count) in &hyp_counts {
        let n = gram.len() - 1;
        stats.total[n] += count;
        if let Some(&rc) = ref_counts.get(gram) {
            stats.correct[n] += count.min(rc);
        }
    }
    stats
}

pub fn bleu_stats(hypothesis: &str, reference: &str, max_order: usize) -> BleuStats {
    stats_from_tokens(
        &tokenize_13a(hypothesis.trim_end_matches(is_py_whitespace)),
        &tokenize_13a(reference.trim_end_matches(is_py_whitespace)),
        max_order,
    )
}

fn log_or_floor(p: f64) -> f64 {
    if p == 0.0 {
        -9_999_999_999.0
    } else {
        p.ln()
    }
}

/// BLEU in `[0, 100]` from pooled statistics.
pub fn bleu_from_stats(stats: &BleuStats, smoothing: BleuSmoothing, effective_order: bool) -> f64 {
    let max_order = stats.correct.len();
    let bp = if stats.sys_len < stats.ref_len {
        if stats.sys_len > 0 {
            (1.0 - stats.ref_len as f64 / stats.sys_len as f64).exp()
        } else {
            0.0
        }
    } else {
        1.0
    };

    if stats.correct.iter().all(|&c| c == 0) {
        return 0.0;
    }

    let mut precisions = vec![0.0; max_order];
    let mut smooth = 1.0;
    let mut eff_order = max_order;
    for n in 0..max_order {
        let total = stats.total[n];
        if total == 0 {
            break;
        }
        if effective_order {
            eff_order = n + 1;
        }
        let correct = stats.correct[n];
        if correct == 0 {
            if smoothing == BleuSmoothing::Exp {
                smooth *= 2.0;
                precisions[n] = 100.0 / (smooth * total as f64);
            }
        } else {
            precisions[n] = 100.0 * correct as f64 / total as f64;
        }
    }

    let log_sum: f64 = precisions[..eff_order].iter().map(|&p| log_or_floor(p)).sum();
    bp * (log_sum / eff_order as f64).exp()
}

/// Sentence BLEU for utility use: smoothed per `config`, with effective
/// order when `bleu_sentence_effective_order` is set.
pub fn sentence_bleu(hypothesis: &str, reference: &str, config: &MetricConfig) -> MetricScore {
    let stats = bleu_stats(hypothesis, reference, config.bleu_max_ngram);
    let score = bleu_from_stats(
        &stats,
        config.bleu_smoothing,
        config.bleu_sentence_effective_order,
    );
    MetricScore {
        score,
        warning: (stats.ref_len == 0).then_some(MetricWarning::EmptyReference),
    }
}

/// Corpus BLEU with pooled statistics and no effective order.
pub fn corpus_bleu<H: AsRef<str>, R: AsRef<str>>(
    hypotheses: &[H],
    references: &[R],
    config: &MetricConfig,
) -> Result<f64> {
    check_lengths(hypotheses.len(), references.len())?;
    let mut pooled = BleuStats::zero(config.bleu_max_ngram);
    for (h, r) in hypotheses.iter().zip(references) {
        pooled += &bleu_stats(h.as_ref(), r.as_ref(), config.bleu_max_ngram);
    }
    Ok(bleu_from_stats(&pooled, config.bleu_smoothing, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> MetricConfig {
        MetricConfig::default()
    }

    #[test]
    fn identical_is_100() {
        let s = sentence_bleu("the cat sat on the mat", "the cat sat on the mat", &cfg());
        assert!((s.score - 100.0).abs() < 1e-9);
        assert!((sentence_bleu("a b", "a b", &cfg()).score - 100.0).abs() < 1e-9);
        assert!((sentence_bleu("abc", "abc", &cfg()).score - 100.0).abs() < 1e-9);
    }

    #[test]
    fn clipped_repetition_matches_hand_count() {
        // 1-grams: "the" x3 clipped to 1 of 3. 2-grams: 0 of 2, smoothed to
        // 100/(2*2). 3-grams: 0 of 1, smoothed to 100/(4*1). No 4-grams, so
        // the effective order is 3. Hypothesis is longer: no brevity penalty.
        let expected = ((100.0f64 / 3.0).ln() + 25.0f64.ln() + 25.0f64.ln()) / 3.0;
        let s = sentence_bleu("the the the", "the cat", &cfg());
        assert!((s.score - expected.exp()).abs() < 1e-9, "{}", s.score);
        // frozen from sacreBLEU 2.5.1 sentence_bleu
        assert!((s.score - 27.516060407455225).abs() < 1e-9);
    }

    #[test]
    fn near_match_agrees_with_reference_implementation() {
        let s = sentence_bleu("the cat sat on a mat", "the cat sat on the mat", &cfg());
        assert!((s.score - 53.7284965911771).abs() < 0.1, "{}", s.score);
    }

    #[test]
    fn empty_reference_is_flagged() {
        let s = sentence_bleu("a b", "", &cfg());
        assert_eq!(s.score, 0.0);
        assert_eq!(s.warning, Some(MetricWarning::EmptyReference));
    }

    #[test]
    fn corpus_identity_and_mismatch() {
        let refs = ["the quick brown fox jumps", "over the lazy dog ."];
        assert!((corpus_bleu(&refs, &refs, &cfg()).unwrap() - 100.0).abs() < 1e-9);
        assert!(corpus_bleu(&refs[..1], &refs, &cfg()).is_err());
        let none: [&str; 0] = [];
        assert!(corpus_bleu(&none, &none, &cfg()).is_err());
    }

    #[test]
    fn single_pair_corpus_differs_only_by_effective_order() {
        let (h, r) = ("a b c", "a b c");
        let mut no_eff = cfg();
        no_eff.bleu_sentence_effective_order = false;
        let corpus = corpus_bleu(&[h], &[r], &cfg()).unwrap();
        assert_eq!(corpus, sentence_bleu(h, r, &no_eff).score);
        assert!(corpus < sentence_bleu(h, r, &cfg()).score);
    }
}

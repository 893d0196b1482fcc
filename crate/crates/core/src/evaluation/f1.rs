use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Phenomenon, SentenceKey};
use crate::tagger::TaggedSentence;

/// Micro-averaged tag agreement for one phenomenon.
///
/// With no tags on either side the score is vacuous: P = R = F1 = 1. With
/// reference tags absent but hypothesis tags present, recall is undefined
/// (`None`) and F1 is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenomenonScore {
    pub phenomenon: Phenomenon,
    pub true_positives: usize,
    pub ref_tag_count: usize,
    pub hyp_tag_count: usize,
    pub precision: f64,
    pub recall: Option<f64>,
    pub f1: f64,
    pub vacuous: bool,
}

impl PhenomenonScore {
    pub fn from_counts(phenomenon: Phenomenon, tp: usize, ref_count: usize, hyp_count: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let (precision, recall, f1, vacuous) = match (ref_count, hyp_count) {
            (0, 0) => (1.0, Some(1.0), 1.0, true),
            (0, _) => (ratio(tp, hyp_count), None, 0.0, false),
            _ => {
                let p = ratio(tp, hyp_count);
                let r = ratio(tp, ref_count);
                let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
                (p, Some(r), f, false)
            }
        };
        PhenomenonScore {
            phenomenon,
            true_positives: tp,
            ref_tag_count: ref_count,
            hyp_tag_count: hyp_count,
            precision,
            recall,
            f1,
            vacuous,
        }
    }
}

fn index_by_key<'a>(side: &str, tagged: &'a [TaggedSentence]) -> Result<BTreeMap<SentenceKey, &'a TaggedSentence>> {
    let mut map = BTreeMap::new();
    for s in tagged {
        if map.insert(s.key(), s).is_some() {
            return Err(Error::Validation(format!("{side} tags list {} twice", s.key())));
        }
    }
    Ok(map)
}

fn lexeme_counts(s: &TaggedSentence, include_ambiguous: bool) -> HashMap<(Phenomenon, &str), usize> {
    let mut counts = HashMap::new();
    for t in s.tags.iter().filter(|t| include_ambiguous || !t.ambiguous) {
        *counts.entry((t.phenomenon, t.lexeme.as_str())).or_insert(0) += 1;
    }
    counts
}

fn describe(keys: &[&SentenceKey]) -> String {
    const SHOWN: usize = 10;
    let mut s: Vec<String> = keys.iter().take(SHOWN).map(|k| k.to_string()).collect();
    if keys.len() > SHOWN {
        s.push(format!("... ({} total)", keys.len()));
    }
    s.join(", ")
}

/// Scores every phenomenon by matching reference and hypothesis tags as
/// lexeme multisets per sentence, then pooling counts over the corpus.
/// Both sides must cover the same sentences.
pub fn phenomenon_f1(
    reference: &[TaggedSentence],
    hypothesis: &[TaggedSentence],
    include_ambiguous: bool,
) -> Result<Vec<PhenomenonScore>> {
    let refs = index_by_key("reference", reference)?;
    let hyps = index_by_key("hypothesis", hypothesis)?;
    let ref_keys: BTreeSet<&SentenceKey> = refs.keys().collect();
    let hyp_keys: BTreeSet<&SentenceKey> = hyps.keys().collect();
    if ref_keys != hyp_keys {
        let no_hyp: Vec<_> = ref_keys.difference(&hyp_keys).copied().collect();
        let no_ref: Vec<_> = hyp_keys.difference(&ref_keys).copied().collect();
        let mut parts = Vec::new();
        if !no_hyp.is_empty() {
            parts.push(format!("missing hypothesis tags for {}", describe(&no_hyp)));
        }
        if !no_ref.is_empty() {
            parts.push(format!("missing reference tags for {}", describe(&no_ref)));
        }
        return Err(Error::Validation(parts.join("; ")));
    }

    let mut counts: BTreeMap<Phenomenon, [usize; 3]> = Phenomenon::ALL.iter().map(|&p| (p, [0; 3])).collect();
    for (key, r) in &refs {
        let rc = lexeme_counts(r, include_ambiguous);
        let hc = lexeme_counts(hyps[key], include_ambiguous);
        for (&(p, lex), &n) in &rc {
            let c = counts.get_mut(&p).expect("all phenomena present");
            c[1] += n;
            c[0] += n.min(hc.get(&(p, lex)).copied().unwrap_or(0));
        }
        for (&(p, _), &n) in &hc {
            counts.get_mut(&p).expect("all phenomena present")[2] += n;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(p, [tp, r, h])| PhenomenonScore::from_counts(p, tp, r, h))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger::{PhenomenonTag, Side};
    use proptest::prelude::*;

    fn sent(index: usize, side: Side, tags: &[(Phenomenon, &str)]) -> TaggedSentence {
        TaggedSentence {
            doc_id: "d".into(),
            sentence_index: index,
            side,
            tags: tags
                .iter()
                .enumerate()
                .map(|(i, (p, l))| PhenomenonTag {
                    phenomenon: *p,
                    token_index: i,
                    lexeme: l.to_string(),
                    ambiguous: false,
                })
                .collect(),
        }
    }

    fn score(scores: &[PhenomenonScore], p: Phenomenon) -> &PhenomenonScore {
        scores.iter().find(|s| s.phenomenon == p).unwrap()
    }

    #[test]
    fn formality_missed() {
        let r = [sent(0, Side::Reference, &[(Phenomenon::Pronouns, "sie"), (Phenomenon::Formality, "Sie")])];
        let h = [sent(0, Side::Hypothesis, &[(Phenomenon::Pronouns, "sie")])];
        let s = phenomenon_f1(&r, &h, true).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(score(&s, Phenomenon::Pronouns).f1, 1.0);
        let f = score(&s, Phenomenon::Formality);
        assert_eq!((f.precision, f.recall, f.f1), (0.0, Some(0.0), 0.0));
        assert!(score(&s, Phenomenon::VerbForm).vacuous);
    }

    #[test]
    fn partial_cohesion_recall() {
        let r = [sent(0, Side::Reference, &[(Phenomenon::LexicalCohesion, "economy"); 2])];
        let h = [sent(0, Side::Hypothesis, &[(Phenomenon::LexicalCohesion, "economy")])];
        let s = score(&phenomenon_f1(&r, &h, true).unwrap(), Phenomenon::LexicalCohesion).clone();
        assert_eq!((s.true_positives, s.precision, s.recall), (1, 1.0, Some(0.5)));
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn pooled_not_averaged() {
        // Sentence 0: 1/1 correct; sentence 1: 0 of 3. Pooled R = 1/4, the
        // mean of per-sentence recalls would be 1/2.
        let p = Phenomenon::Pronouns;
        let r = [sent(0, Side::Reference, &[(p, "er")]), sent(1, Side::Reference, &[(p, "er"), (p, "sie"), (p, "es")])];
        let h = [sent(0, Side::Hypothesis, &[(p, "er")]), sent(1, Side::Hypothesis, &[])];
        let s = score(&phenomenon_f1(&r, &h, true).unwrap(), p).clone();
        assert_eq!(s.recall, Some(0.25));
        assert_eq!(s.precision, 1.0);
    }

    #[test]
    fn hypothesis_only_tags_have_no_recall() {
        let p = Phenomenon::Pronouns;
        let s = PhenomenonScore::from_counts(p, 0, 0, 3);
        assert_eq!((s.precision, s.recall, s.f1, s.vacuous), (0.0, None, 0.0, false));
    }

    #[test]
    fn coverage_mismatch_lists_keys() {
        let r = [sent(0, Side::Reference, &[]), sent(1, Side::Reference, &[])];
        let h = [sent(0, Side::Hypothesis, &[])];
        let err = phenomenon_f1(&r, &h, true).unwrap_err().to_string();
        assert!(err.contains("d#1"), "{err}");
    }

    #[test]
    fn ambiguous_tags_can_be_excluded() {
        let mut r = sent(0, Side::Reference, &[(Phenomenon::Formality, "Sie")]);
        r.tags[0].ambiguous = true;
        let h = sent(0, Side::Hypothesis, &[]);
        let with = phenomenon_f1(&[r.clone()], std::slice::from_ref(&h), true).unwrap();
        let without = phenomenon_f1(&[r], &[h], false).unwrap();
        assert_eq!(score(&with, Phenomenon::Formality).ref_tag_count, 1);
        assert!(score(&without, Phenomenon::Formality).vacuous);
    }

    fn tag_sets() -> impl Strategy<Value = Vec<Vec<(usize, usize)>>> {
        prop::collection::vec(prop::collection::vec((0usize..4, 0usize..3), 0..5), 1..6)
    }

    fn build(side: Side, sets: &[Vec<(usize, usize)>]) -> Vec<TaggedSentence> {
        const LEX: [&str; 3] = ["a", "b", "c"];
        sets.iter()
            .enumerate()
            .map(|(i, tags)| {
                let tags: Vec<(Phenomenon, &str)> = tags.iter().map(|&(p, l)| (Phenomenon::ALL[p], LEX[l])).collect();
                sent(i, side, &tags)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn swap_exchanges_precision_and_recall(a in tag_sets(), b in tag_sets()) {
            let n = a.len().min(b.len());
            let (r, h) = (build(Side::Reference, &a[..n]), build(Side::Hypothesis, &b[..n]));
            let fwd = phenomenon_f1(&r, &h, true).unwrap();
            let bwd = phenomenon_f1(&h, &r, true).unwrap();
            for (f, b) in fwd.iter().zip(&bwd) {
                prop_assert_eq!(f.true_positives, b.true_positives);
                if f.ref_tag_count > 0 && f.hyp_tag_count > 0 {
                    prop_assert_eq!(Some(f.precision), b.recall);
                    prop_assert_eq!(f.recall, Some(b.precision));
                    prop_assert!((f.f1 - b.f1).abs() < 1e-12);
                }
                prop_assert!((0.0..=1.0).contains(&f.f1));
            }
            let same = phenomenon_f1(&r, &r, true).unwrap();
            prop_assert!(same.iter().all(|s| s.f1 == 1.0));
        }
    }
}

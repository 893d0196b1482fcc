use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HumanAnnotation, Phenomenon, Preference, SentenceKey};
use crate::tagger::TaggedSentence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapEntry {
    /// Joined sentences the annotator tagged with the phenomenon.
    pub human_tagged: usize,
    /// Of those, sentences the automatic tagger also tagged.
    pub both_tagged: usize,
    /// `both_tagged / human_tagged`; absent when nothing was human-tagged.
    pub ratio: Option<f64>,
}

/// Agreement between automatic sentence tags and human annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub phenomena: BTreeMap<Phenomenon, OverlapEntry>,
    pub joined: usize,
    /// Annotations without a matching tagged sentence.
    pub unjoined: usize,
    /// Joined sentences carrying at least one automatic tag.
    pub auto_tagged: usize,
}

pub fn human_overlap(auto: &[TaggedSentence], human: &[HumanAnnotation], include_ambiguous: bool) -> OverlapReport {
    let by_key: HashMap<SentenceKey, &TaggedSentence> = auto.iter().map(|s| (s.key(), s)).collect();
    let mut counts: BTreeMap<Phenomenon, (usize, usize)> = Phenomenon::ALL.iter().map(|&p| (p, (0, 0))).collect();
    let (mut joined, mut unjoined, mut auto_tagged) = (0, 0, 0);
    for ann in human {
        let Some(sentence) = by_key.get(&ann.key()) else {
            unjoined += 1;
            continue;
        };
        joined += 1;
        if sentence.tags.iter().any(|t| include_ambiguous || !t.ambiguous) {
            auto_tagged += 1;
        }
        for p in &ann.phenomena {
            let c = counts.get_mut(p).expect("all phenomena present");
            c.0 += 1;
            if sentence.has(*p, include_ambiguous) {
                c.1 += 1;
            }
        }
    }
    OverlapReport {
        phenomena: counts
            .into_iter()
            .map(|(p, (h, both))| {
                let ratio = (h > 0).then(|| both as f64 / h as f64);
                (p, OverlapEntry { human_tagged: h, both_tagged: both, ratio })
            })
            .collect(),
        joined,
        unjoined,
        auto_tagged,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceCounts {
    pub greedy: usize,
    pub qad: usize,
    pub tie: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectnessRate {
    /// Annotations judging both systems on this phenomenon.
    pub judged: usize,
    pub greedy_correct: usize,
    pub qad_correct: usize,
    pub greedy_rate: f64,
    pub qad_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceSummary {
    /// Semantic-difference bucket (1..=5) → preference counts.
    pub by_difference: BTreeMap<u8, PreferenceCounts>,
    /// Only phenomena with at least one judgement appear.
    pub correctness: BTreeMap<Phenomenon, CorrectnessRate>,
    pub annotations: usize,
}

pub fn preference_summary(annotations: &[HumanAnnotation]) -> Result<PreferenceSummary> {
    if annotations.is_empty() {
        return Err(Error::InvalidArgument("preference summary over zero annotations".into()));
    }
    let mut by_difference: BTreeMap<u8, PreferenceCounts> = (1..=5).map(|b| (b, PreferenceCounts::default())).collect();
    let mut judged: BTreeMap<Phenomenon, (usize, usize, usize)> = BTreeMap::new();
    for ann in annotations {
        ann.validate()?;
        let bucket = by_difference.get_mut(&ann.semantic_difference).expect("validated bucket");
        match ann.preference {
            Preference::Greedy => bucket.greedy += 1,
            Preference::Qad => bucket.qad += 1,
            Preference::Tie => bucket.tie += 1,
        }
        for p in &ann.phenomena {
            if let (Some(&g), Some(&q)) = (ann.correct_greedy.get(p), ann.correct_qad.get(p)) {
                let e = judged.entry(*p).or_default();
                e.0 += 1;
                e.1 += g as usize;
                e.2 += q as usize;
            }
        }
    }
    Ok(PreferenceSummary {
        by_difference,
        correctness: judged
            .into_iter()
            .map(|(p, (n, g, q))| {
                (
                    p,
                    CorrectnessRate {
                        judged: n,
                        greedy_correct: g,
                        qad_correct: q,
                        greedy_rate: g as f64 / n as f64,
                        qad_rate: q as f64 / n as f64,
                    },
                )
            })
            .collect(),
        annotations: annotations.len(),
    })
}

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{AlignmentSet, CandidatePool, Document, SentenceKey};
use crate::text::split_whitespace;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    /// A corpus sentence without a candidate pool.
    MissingPool { key: SentenceKey },
    /// A pool whose key does not resolve to a corpus sentence.
    DanglingPool { key: SentenceKey },
    DuplicatePool { key: SentenceKey },
    DanglingAlignment { key: SentenceKey },
    /// An alignment link outside the whitespace tokens of the source or the
    /// reference.
    AlignmentOverflow {
        key: SentenceKey,
        link: (usize, usize),
        source_len: usize,
        target_len: usize,
    },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::MissingPool { key } => write!(f, "{key}: no candidate pool"),
            Finding::DanglingPool { key } => write!(f, "{key}: pool refers to no corpus sentence"),
            Finding::DuplicatePool { key } => write!(f, "{key}: more than one pool"),
            Finding::DanglingAlignment { key } => {
                write!(f, "{key}: alignment refers to no corpus sentence")
            }
            Finding::AlignmentOverflow {
                key,
                link,
                source_len,
                target_len,
            } => write!(
                f,
                "{key}: link {}-{} outside {source_len} source / {target_len} target tokens",
                link.0, link.1
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    /// An empty report means the experiment is runnable.
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Cross-checks corpus, pools and (optionally) alignments. Findings are
/// ordered: missing pools in corpus order, then pool findings in pool file
/// order, then alignment findings in alignment file order.
pub fn validate_experiment(
    corpus: &[Document],
    pools: &[CandidatePool],
    alignments: Option<&[AlignmentSet]>,
) -> ValidationReport {
    let mut sentences: BTreeMap<SentenceKey, (usize, usize)> = BTreeMap::new();
    let mut order = Vec::new();
    for doc in corpus {
        for pair in &doc.pairs {
            let key = doc.key(pair.index);
            let lens = (
                split_whitespace(&pair.source).len(),
                split_whitespace(&pair.reference).len(),
            );
            sentences.insert(key.clone(), lens);
            order.push(key);
        }
    }

    let mut findings = Vec::new();
    let pooled: BTreeSet<SentenceKey> = pools.iter().map(CandidatePool::key).collect();
    for key in &order {
        if !pooled.contains(key) {
            findings.push(Finding::MissingPool { key: key.clone() });
        }
    }

    let mut seen = BTreeSet::new();
    for pool in pools {
        let key = pool.key();
        if !sentences.contains_key(&key) {
            findings.push(Finding::DanglingPool { key });
        } else if !seen.insert(key.clone()) {
            findings.push(Finding::DuplicatePool { key });
        }
    }

    for set in alignments.unwrap_or_default() {
        let key = set.key();
        match sentences.get(&key) {
            None => findings.push(Finding::DanglingAlignment { key }),
            Some(&(source_len, target_len)) => {
                if let Some(link) = set.first_overflow(source_len, target_len) {
                    findings.push(Finding::AlignmentOverflow {
                        key,
                        link,
                        source_len,
                        target_len,
                    });
                }
            }
        }
    }

    ValidationReport { findings }
}

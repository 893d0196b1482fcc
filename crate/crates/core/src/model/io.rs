//! JSON Lines ingestion and emission for the corpus, pool, alignment and
//! annotation files. Blank lines are skipped; line numbers in errors are
//! 1-based.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{
    AlignmentSet, Candidate, CandidatePool, Document, HumanAnnotation, LanguagePair, SentencePair,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub doc_id: String,
    pub index: usize,
    pub src_lang: String,
    pub tgt_lang: String,
    pub source: String,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub text: String,
    #[serde(default)]
    pub logprob: Option<f64>,
    #[serde(default)]
    pub qe: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolRecord {
    pub doc_id: String,
    pub index: usize,
    pub candidates: Vec<CandidateRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRecord {
    pub doc_id: String,
    pub index: usize,
    pub links: Vec<(usize, usize)>,
}

impl From<&CandidatePool> for PoolRecord {
    fn from(pool: &CandidatePool) -> Self {
        PoolRecord {
            doc_id: pool.doc_id.clone(),
            index: pool.sentence_index,
            candidates: pool
                .candidates
                .iter()
                .map(|c| CandidateRecord {
                    text: c.text.clone(),
                    logprob: c.model_logprob,
                    qe: c.qe_score,
                })
                .collect(),
        }
    }
}

impl From<&AlignmentSet> for AlignmentRecord {
    fn from(set: &AlignmentSet) -> Self {
        AlignmentRecord {
            doc_id: set.doc_id.clone(),
            index: set.sentence_index,
            links: set.links.clone(),
        }
    }
}

impl Document {
    /// One corpus record per sentence, in order.
    pub fn to_records(&self) -> Vec<CorpusRecord> {
        self.pairs
            .iter()
            .map(|p| CorpusRecord {
                doc_id: self.doc_id.clone(),
                index: p.index,
                src_lang: self.lang.source().to_string(),
                tgt_lang: self.lang.target().to_string(),
                source: p.source.clone(),
                reference: p.reference.clone(),
            })
            .collect()
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses JSON Lines text, returning each record with its 1-based line
/// number. `origin` is only used in error messages.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str, origin: &Path) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, record));
    }
    Ok(out)
}

pub fn load_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    parse_jsonl(&read_to_string(path)?, path)
}

/// Serializes records one per line, each line terminated by `\n`.
pub fn to_jsonl_string<T: Serialize>(records: &[T]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let text = to_jsonl_string(records)?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))
}

fn invalid(origin: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Validation(format!("{}:{line}: {}", origin.display(), message.into()))
}

/// Groups sentence records into documents. Sentences of one document must be
/// consecutive lines with indices 0, 1, 2, ...
pub fn assemble_corpus(records: Vec<(usize, CorpusRecord)>, origin: &Path) -> Result<Vec<Document>> {
    let mut docs: Vec<Document> = Vec::new();
    let mut closed: HashSet<String> = HashSet::new();

    for (line, r) in records {
        if r.source.trim().is_empty() {
            return Err(invalid(origin, line, format!("{}#{}: empty source", r.doc_id, r.index)));
        }
        let lang = LanguagePair::new(r.src_lang.as_str(), r.tgt_lang.as_str())
            .map_err(|e| invalid(origin, line, e.to_string()))?;

        let continues = docs.last().is_some_and(|d| d.doc_id == r.doc_id);
        if !continues {
            if let Some(prev) = docs.last() {
                closed.insert(prev.doc_id.clone());
            }
            if closed.contains(&r.doc_id) {
                return Err(invalid(
                    origin,
                    line,
                    format!("duplicate doc_id `{}` (its sentences are not contiguous)", r.doc_id),
                ));
            }
            docs.push(Document {
                doc_id: r.doc_id.clone(),
                lang: lang.clone(),
                pairs: Vec::new(),
            });
        }
        let doc = docs.last_mut().expect("document pushed above");
        if doc.lang != lang {
            return Err(invalid(
                origin,
                line,
                format!("document `{}` mixes language pairs {} and {}", doc.doc_id, doc.lang, lang),
            ));
        }
        let expected = doc.pairs.len();
        if r.index != expected {
            return Err(invalid(
                origin,
                line,
                format!(
                    "document `{}`: sentence index {} where {} was expected (indices must be contiguous from 0)",
                    doc.doc_id, r.index, expected
                ),
            ));
        }
        doc.pairs.push(SentencePair {
            index: r.index,
            source: r.source,
            reference: r.reference,
        });
    }
    Ok(docs)
}

pub fn parse_corpus(text: &str, origin: &Path) -> Result<Vec<Document>> {
    assemble_corpus(parse_jsonl(text, origin)?, origin)
}

pub fn load_corpus(path: &Path) -> Result<Vec<Document>> {
    parse_corpus(&read_to_string(path)?, path)
}

pub fn parse_candidate_pools(text: &str, origin: &Path) -> Result<Vec<CandidatePool>> {
    parse_jsonl::<PoolRecord>(text, origin)?
        .into_iter()
        .map(|(line, r)| {
            let candidates = r
                .candidates
                .into_iter()
                .map(|c| Candidate {
                    text: c.text,
                    model_logprob: c.logprob,
                    qe_score: c.qe,
                })
                .collect();
            CandidatePool::new(r.doc_id, r.index, candidates)
                .map_err(|e| invalid(origin, line, e.to_string()))
        })
        .collect()
}

pub fn load_candidate_pools(path: &Path) -> Result<Vec<CandidatePool>> {
    parse_candidate_pools(&read_to_string(path)?, path)
}

pub fn parse_alignments(text: &str, origin: &Path) -> Result<Vec<AlignmentSet>> {
    parse_jsonl::<AlignmentRecord>(text, origin)?
        .into_iter()
        .map(|(line, r)| {
            AlignmentSet::new(r.doc_id, r.index, r.links)
                .map_err(|e| invalid(origin, line, e.to_string()))
        })
        .collect()
}

pub fn load_alignments(path: &Path) -> Result<Vec<AlignmentSet>> {
    parse_alignments(&read_to_string(path)?, path)
}

pub fn parse_annotations(text: &str, origin: &Path) -> Result<Vec<HumanAnnotation>> {
    parse_jsonl::<HumanAnnotation>(text, origin)?
        .into_iter()
        .map(|(line, a)| {
            a.validate().map_err(|e| invalid(origin, line, e.to_string()))?;
            Ok(a)
        })
        .collect()
}

pub fn load_annotations(path: &Path) -> Result<Vec<HumanAnnotation>> {
    parse_annotations(&read_to_string(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn origin() -> &'static Path {
        Path::new("test.jsonl")
    }

    fn line(doc: &str, index: usize) -> String {
        format!(
            r#"{{"doc_id": "{doc}", "index": {index}, "src_lang": "en", "tgt_lang": "de", "source": "s{index}", "reference": "r{index}"}}"#
        )
    }

    #[test]
    fn groups_sentences_into_documents() {
        let text = [line("a", 0), line("a", 1)].join("\n");
        let docs = parse_corpus(&text, origin()).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].pairs.len(), 2);
        assert_eq!(docs[0].lang.target(), "de");
    }

    #[test]
    fn index_gap_is_a_validation_error() {
        let text = [line("a", 0), line("a", 2)].join("\n");
        let err = parse_corpus(&text, origin()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn interrupted_document_is_a_duplicate() {
        let text = [line("a", 0), line("b", 0), line("a", 1)].join("\n");
        let err = parse_corpus(&text, origin()).unwrap_err();
        assert!(err.to_string().contains("duplicate doc_id"), "{err}");
    }

    #[test]
    fn empty_file_gives_empty_corpus() {
        assert!(parse_corpus("", origin()).unwrap().is_empty());
        assert!(parse_corpus("\n\n", origin()).unwrap().is_empty());
    }

    #[test]
    fn malformed_line_names_the_line() {
        let text = format!("{}\n{{not json\n", line("a", 0));
        match parse_corpus(&text, origin()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn blank_source_is_rejected() {
        let text = line("a", 0).replace("\"s0\"", "\"  \"");
        assert!(parse_corpus(&text, origin()).is_err());
    }

    #[test]
    fn pools_preserve_order_and_reject_empty() {
        let fifty: Vec<String> = (0..50)
            .map(|i| format!(r#"{{"text": "c{i}", "logprob": -{i}.5, "qe": null}}"#))
            .collect();
        let text = format!(
            r#"{{"doc_id": "a", "index": 0, "candidates": [{}]}}"#,
            fifty.join(",")
        );
        let pools = parse_candidate_pools(&text, origin()).unwrap();
        assert_eq!(pools[0].len(), 50);
        assert_eq!(pools[0].candidates[7].text, "c7");
        assert_eq!(pools[0].candidates[7].model_logprob, Some(-7.5));

        let one = r#"{"doc_id": "a", "index": 0, "candidates": [{"text": "x"}]}"#;
        assert_eq!(parse_candidate_pools(one, origin()).unwrap()[0].len(), 1);

        let empty = r#"{"doc_id": "a", "index": 0, "candidates": []}"#;
        assert!(matches!(
            parse_candidate_pools(empty, origin()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn annotations_are_validated() {
        let ok = r#"{"doc_id": "d", "index": 0, "phenomena": ["pronouns"], "correct_greedy": {"pronouns": false}, "correct_qad": {"pronouns": true}, "semantic_difference": 4, "preference": "qad"}"#;
        let parsed = parse_annotations(ok, origin()).unwrap();
        assert_eq!(parsed[0].comment, None);
        let bad = ok.replace("\"semantic_difference\": 4", "\"semantic_difference\": 0");
        assert!(parse_annotations(&bad, origin()).is_err());
    }

    fn arb_corpus() -> impl Strategy<Value = Vec<CorpusRecord>> {
        let sentence = "[a-zA-Z0-9 ,.!?\"\\\\ãéü]{1,20}";
        prop::collection::vec(
            (1usize..4, prop::collection::vec((sentence, sentence), 1..4)),
            0..4,
        )
        .prop_map(|docs| {
            let mut out = Vec::new();
            for (d, (_, sents)) in docs.into_iter().enumerate() {
                for (i, (s, r)) in sents.into_iter().enumerate() {
                    out.push(CorpusRecord {
                        doc_id: format!("doc{d}"),
                        index: i,
                        src_lang: "en".into(),
                        tgt_lang: "pt".into(),
                        source: format!("x{s}"),
                        reference: r,
                    });
                }
            }
            out
        })
    }

    proptest! {
        #[test]
        fn corpus_round_trip_is_canonical(records in arb_corpus()) {
            let text = to_jsonl_string(&records).unwrap();
            let docs = parse_corpus(&text, origin()).unwrap();
            let emitted: Vec<CorpusRecord> = docs.iter().flat_map(Document::to_records).collect();
            prop_assert_eq!(to_jsonl_string(&emitted).unwrap(), text);
        }
    }
}

//! Rule-based tagging of target-side tokens with discourse phenomena.
//!
//! Lexicon phenomena (pronouns, formality, verb form) are matched per
//! sentence against language-specific lists. Lexical cohesion is detected
//! per document: a target token is tagged when the (source word, target
//! word) pair it is aligned through occurs more than `threshold` times in
//! the document. Tokens are whitespace-separated; matching ignores leading
//! and trailing punctuation.

mod align;
mod lexicon;

pub use align::heuristic_alignment;
pub use lexicon::{LexEntry, Lexicon, MatchMode};

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::parse_jsonl;
use crate::model::{AlignmentSet, Document, Phenomenon, SentenceKey};
use crate::text::{normalize, split_whitespace, strip_punct};

/// MuDA's repetition threshold.
pub const DEFAULT_REPETITION_THRESHOLD: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Reference,
    Hypothesis,
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(Side::Reference),
            "hypothesis" => Ok(Side::Hypothesis),
            _ => Err(Error::InvalidArgument(format!(
                "unknown side `{s}` (expected reference or hypothesis)"
            ))),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Reference => "reference",
            Side::Hypothesis => "hypothesis",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhenomenonTag {
    pub phenomenon: Phenomenon,
    #[serde(rename = "token")]
    pub token_index: usize,
    pub lexeme: String,
    /// Set for case-sensitive matches at sentence start, where
    /// capitalization does not distinguish e.g. German "Sie" from "sie".
    #[serde(default)]
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub doc_id: String,
    #[serde(rename = "index")]
    pub sentence_index: usize,
    pub side: Side,
    pub tags: Vec<PhenomenonTag>,
}

impl TaggedSentence {
    pub fn key(&self) -> SentenceKey {
        SentenceKey::new(self.doc_id.clone(), self.sentence_index)
    }

    pub fn has(&self, phenomenon: Phenomenon, include_ambiguous: bool) -> bool {
        self.tags
            .iter()
            .any(|t| t.phenomenon == phenomenon && (include_ambiguous || !t.ambiguous))
    }
}

fn sort_tags(tags: &mut [PhenomenonTag]) {
    tags.sort_by_key(|a| (a.token_index, a.phenomenon));
}

/// Tags every token matching one of the lexicon lists. A token carries at
/// most one tag per phenomenon but may carry several phenomena.
pub fn tag_lexicon_phenomena(tokens: &[&str], lexicon: &Lexicon) -> Vec<PhenomenonTag> {
    let mut tags = Vec::new();
    for (index, raw) in tokens.iter().enumerate() {
        let token = strip_punct(raw);
        if token.is_empty() {
            continue;
        }
        for (phenomenon, entries) in lexicon.lists() {
            if let Some((lexeme, ambiguous)) = entries.iter().find_map(|e| e.matches(token, index)) {
                tags.push(PhenomenonTag {
                    phenomenon,
                    token_index: index,
                    lexeme,
                    ambiguous,
                });
            }
        }
    }
    sort_tags(&mut tags);
    tags
}

/// Source and target tokens of one sentence.
#[derive(Debug, Clone)]
pub struct SentenceTokens<'a> {
    pub source: Vec<&'a str>,
    pub target: Vec<&'a str>,
}

impl<'a> SentenceTokens<'a> {
    pub fn new(source: &'a str, target: &'a str) -> Self {
        SentenceTokens {
            source: split_whitespace(source),
            target: split_whitespace(target),
        }
    }
}

/// Lexical-cohesion tags per sentence of one document. `links[k]` holds the
/// alignment of sentence `k`. Pairs whose target side is pure punctuation
/// are not counted.
pub fn tag_lexical_repetition(
    sentences: &[SentenceTokens<'_>],
    links: &[Vec<(usize, usize)>],
    threshold: usize,
) -> Result<Vec<Vec<PhenomenonTag>>> {
    if threshold == 0 {
        return Err(Error::InvalidArgument("repetition threshold must be >= 1".into()));
    }
    if sentences.len() != links.len() {
        return Err(Error::InvalidArgument(format!(
            "{} sentences but {} alignment sets",
            sentences.len(),
            links.len()
        )));
    }

    let pair_of = |k: usize, (s, t): (usize, usize)| -> Result<Option<(String, String)>> {
        let sent = &sentences[k];
        if s >= sent.source.len() || t >= sent.target.len() {
            return Err(Error::Validation(format!(
                "sentence {k}: alignment link {s}-{t} outside {} source / {} target tokens",
                sent.source.len(),
                sent.target.len()
            )));
        }
        let (src, tgt) = (normalize(sent.source[s]), normalize(sent.target[t]));
        Ok((!src.is_empty() && !tgt.is_empty()).then_some((src, tgt)))
    };

    let mut counts: HashMap<(String, String), usize> = HashMap::new();
    for (k, sentence_links) in links.iter().enumerate() {
        for &link in sentence_links {
            if let Some(pair) = pair_of(k, link)? {
                *counts.entry(pair).or_default() += 1;
            }
        }
    }

    let mut out = Vec::with_capacity(sentences.len());
    for (k, sentence_links) in links.iter().enumerate() {
        let mut tagged: BTreeMap<usize, String> = BTreeMap::new();
        for &link in sentence_links {
            if let Some(pair) = pair_of(k, link)? {
                if counts[&pair] > threshold {
                    tagged.entry(link.1).or_insert(pair.1);
                }
            }
        }
        out.push(
            tagged
                .into_iter()
                .map(|(token_index, lexeme)| PhenomenonTag {
                    phenomenon: Phenomenon::LexicalCohesion,
                    token_index,
                    lexeme,
                    ambiguous: false,
                })
                .collect(),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TaggerOptions {
    pub threshold: usize,
}

impl Default for TaggerOptions {
    fn default() -> Self {
        TaggerOptions {
            threshold: DEFAULT_REPETITION_THRESHOLD,
        }
    }
}

/// Tags one side of a document. `texts` runs parallel to `document.pairs`.
/// When `alignments` is `None`, links come from [`heuristic_alignment`];
/// otherwise every sentence needs an alignment set.
pub fn tag_document(
    document: &Document,
    side: Side,
    texts: &[&str],
    lexicon: &Lexicon,
    alignments: Option<&[AlignmentSet]>,
    options: &TaggerOptions,
) -> Result<Vec<TaggedSentence>> {
    if texts.len() != document.pairs.len() {
        return Err(Error::InvalidArgument(format!(
            "document `{}` has {} sentences but {} {side} texts were given",
            document.doc_id,
            document.pairs.len(),
            texts.len()
        )));
    }
    lexicon.check_language(document.lang.target())?;

    let tokens: Vec<SentenceTokens<'_>> = document
        .pairs
        .iter()
        .zip(texts)
        .map(|(p, t)| SentenceTokens::new(&p.source, t))
        .collect();

    let links: Vec<Vec<(usize, usize)>> = match alignments {
        None => tokens
            .iter()
            .map(|t| heuristic_alignment(&t.source, &t.target))
            .collect(),
        Some(sets) => {
            let by_index: HashMap<usize, &AlignmentSet> = sets
                .iter()
                .filter(|s| s.doc_id == document.doc_id)
                .map(|s| (s.sentence_index, s))
                .collect();
            document
                .pairs
                .iter()
                .map(|p| {
                    by_index.get(&p.index).map(|s| s.links.clone()).ok_or_else(|| {
                        Error::Validation(format!("{}: no alignment", document.key(p.index)))
                    })
                })
                .collect::<Result<_>>()?
        }
    };

    let repetition = tag_lexical_repetition(&tokens, &links, options.threshold).map_err(|e| match e {
        Error::Validation(m) => Error::Validation(format!("document `{}`: {m}", document.doc_id)),
        other => other,
    })?;

    Ok(document
        .pairs
        .iter()
        .zip(tokens.iter().zip(repetition))
        .map(|(pair, (tok, mut tags))| {
            tags.extend(tag_lexicon_phenomena(&tok.target, lexicon));
            sort_tags(&mut tags);
            TaggedSentence {
                doc_id: document.doc_id.clone(),
                sentence_index: pair.index,
                side,
                tags,
            }
        })
        .collect())
}

/// Lexicons keyed by target language, or one lexicon for every document.
#[derive(Debug, Clone)]
pub enum LexiconSet {
    Single(Lexicon),
    ByLanguage(BTreeMap<String, Lexicon>),
}

impl LexiconSet {
    /// Bundled lexicons for every target language of `corpus`.
    pub fn builtin_for(corpus: &[Document]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for doc in corpus {
            let lang = doc.lang.target();
            if !map.contains_key(lang) {
                let lex = Lexicon::builtin(lang).ok_or_else(|| {
                    Error::Validation(format!(
                        "no bundled lexicon for `{lang}` (available: {}); pass one explicitly",
                        Lexicon::builtin_languages().collect::<Vec<_>>().join(", ")
                    ))
                })?;
                map.insert(lang.to_string(), lex);
            }
        }
        Ok(LexiconSet::ByLanguage(map))
    }

    pub fn get(&self, target_language: &str) -> Result<&Lexicon> {
        match self {
            LexiconSet::Single(l) => Ok(l),
            LexiconSet::ByLanguage(map) => map
                .get(target_language)
                .ok_or_else(|| Error::Validation(format!("no lexicon for target language `{target_language}`"))),
        }
    }
}

/// Tags every document of a corpus in parallel; output follows corpus order.
/// `texts` maps sentence keys to the side's text; when `None`, the corpus
/// references are tagged.
pub fn tag_corpus(
    corpus: &[Document],
    side: Side,
    texts: Option<&HashMap<SentenceKey, String>>,
    lexicons: &LexiconSet,
    alignments: Option<&[AlignmentSet]>,
    options: &TaggerOptions,
) -> Result<Vec<TaggedSentence>> {
    let per_doc: Vec<Result<Vec<TaggedSentence>>> = corpus
        .par_iter()
        .map(|doc| {
            let side_texts: Vec<&str> = match texts {
                None => doc.pairs.iter().map(|p| p.reference.as_str()).collect(),
                Some(map) => doc
                    .pairs
                    .iter()
                    .map(|p| {
                        map.get(&doc.key(p.index)).map(String::as_str).ok_or_else(|| {
                            Error::Validation(format!("{}: no {side} text", doc.key(p.index)))
                        })
                    })
                    .collect::<Result<_>>()?,
            };
            let lexicon = lexicons.get(doc.lang.target())?;
            tag_document(doc, side, &side_texts, lexicon, alignments, options)
        })
        .collect();
    let mut out = Vec::new();
    for r in per_doc {
        out.extend(r?);
    }
    Ok(out)
}

/// Parses a tag file (one [`TaggedSentence`] per line).
pub fn parse_tags(text: &str, origin: &Path) -> Result<Vec<TaggedSentence>> {
    let mut seen = HashSet::new();
    parse_jsonl::<TaggedSentence>(text, origin)?
        .into_iter()
        .map(|(line, s)| {
            if !seen.insert((s.key(), s.side)) {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line,
                    message: format!("duplicate {} tags for {}", s.side, s.key()),
                });
            }
            Ok(s)
        })
        .collect()
}

pub fn load_tags(path: &Path) -> Result<Vec<TaggedSentence>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tags(&text, path)
}

/// Sentences carrying at least one tag of any phenomenon in `filter`
/// (all phenomena when `filter` is empty).
pub fn tagged_keys(
    tagged: &[TaggedSentence],
    filter: &BTreeSet<Phenomenon>,
    include_ambiguous: bool,
) -> BTreeSet<SentenceKey> {
    tagged
        .iter()
        .filter(|s| {
            s.tags.iter().any(|t| {
                (filter.is_empty() || filter.contains(&t.phenomenon))
                    && (include_ambiguous || !t.ambiguous)
            })
        })
        .map(TaggedSentence::key)
        .collect()
}

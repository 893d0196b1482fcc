//! Lexical cohesion and the utility registry.
//!
//! The lexical cohesion (LC) ratio of a text is the share of its content
//! words that repeat an earlier content word, either literally or through a
//! synonym group. Stopwords are not content words.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::decoding::{Utility, UtilityContext, UtilityFunction};
use crate::error::{Error, Result};
use crate::metrics::{chrf, sentence_bleu, MetricConfig};
use crate::text::{normalize, split_whitespace};

macro_rules! stopwords {
    ($($lang:literal),*) => {
        &[$(($lang, include_str!(concat!("../resources/stopwords/", $lang, ".txt")))),*]
    };
}

const BUILTIN_STOPWORDS: &[(&str, &str)] = stopwords!("ar", "de", "en", "fr", "ko", "pt", "ru");

/// Decides which tokens count as content words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContentWordFilter {
    stopwords: HashSet<String>,
}

impl ContentWordFilter {
    /// A filter that treats every token as a content word.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(stopwords: I) -> Result<Self> {
        let stopwords: HashSet<String> = stopwords.into_iter().map(Into::into).collect();
        if let Some(bad) = stopwords.iter().find(|w| w.to_lowercase() != **w) {
            return Err(Error::Validation(format!("stopword `{bad}` is not lowercase")));
        }
        Ok(ContentWordFilter { stopwords })
    }

    /// One stopword per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn builtin(language: &str) -> Option<Self> {
        BUILTIN_STOPWORDS
            .iter()
            .find(|(l, _)| *l == language)
            .map(|(_, text)| Self::parse(text).expect("bundled stopwords are lowercase"))
    }

    pub fn builtin_languages() -> impl Iterator<Item = &'static str> {
        BUILTIN_STOPWORDS.iter().map(|(l, _)| *l)
    }

    pub fn is_stopword(&self, normalized: &str) -> bool {
        self.stopwords.contains(normalized)
    }

    /// Normalized content words of `text`, in order.
    pub fn content_words(&self, text: &str) -> Vec<String> {
        split_whitespace(text)
            .into_iter()
            .map(normalize)
            .filter(|w| !w.is_empty() && !self.is_stopword(w))
            .collect()
    }
}

/// Groups of mutually synonymous (or hypernym-related) lemmas.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    pub language: Option<String>,
    group_of: HashMap<String, usize>,
    groups: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SynonymFile {
    #[serde(default)]
    language: Option<String>,
    groups: Vec<Vec<String>>,
}

impl SynonymLexicon {
    pub fn new(language: Option<String>, groups: Vec<Vec<String>>) -> Result<Self> {
        let mut group_of = HashMap::new();
        for (id, group) in groups.iter().enumerate() {
            for lemma in group {
                if lemma.is_empty() || lemma.to_lowercase() != *lemma {
                    return Err(Error::Validation(format!(
                        "synonym `{lemma}` must be non-empty and lowercase"
                    )));
                }
                if let Some(prev) = group_of.insert(lemma.clone(), id) {
                    if prev != id {
                        return Err(Error::Validation(format!(
                            "synonym `{lemma}` appears in groups {prev} and {id}"
                        )));
                    }
                }
            }
        }
        Ok(SynonymLexicon {
            language,
            group_of,
            groups: groups.len(),
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: SynonymFile = toml::from_str(text)
            .map_err(|e| Error::Validation(format!("invalid synonym lexicon: {}", e.message())))?;
        Self::new(file.language, file.groups)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn group(&self, lemma: &str) -> Option<usize> {
        self.group_of.get(lemma).copied()
    }

    pub fn group_count(&self) -> usize {
        self.groups
    }
}

/// Cohesion devices among already-normalized content words.
pub fn cohesion_devices(words: &[String], synonyms: Option<&SynonymLexicon>) -> usize {
    let mut seen_forms: HashSet<&str> = HashSet::new();
    let mut seen_groups: HashSet<usize> = HashSet::new();
    let mut devices = 0;
    for w in words {
        let group = synonyms.and_then(|s| s.group(w));
        if seen_forms.contains(w.as_str()) || group.is_some_and(|g| seen_groups.contains(&g)) {
            devices += 1;
        }
        seen_forms.insert(w);
        if let Some(g) = group {
            seen_groups.insert(g);
        }
    }
    devices
}

/// Devices divided by content words; 0 when the text has no content words.
pub fn lexical_cohesion_ratio(text: &str, filter: &ContentWordFilter, synonyms: Option<&SynonymLexicon>) -> f64 {
    let words = filter.content_words(text);
    if words.is_empty() {
        return 0.0;
    }
    cohesion_devices(&words, synonyms) as f64 / words.len() as f64
}

struct BleuUtility(MetricConfig);

impl Utility for BleuUtility {
    fn name(&self) -> &str {
        "bleu"
    }

    fn evaluate(&self, h: &str, r: &str, _: &UtilityContext<'_>) -> Result<f64> {
        Ok(sentence_bleu(h, r, &self.0).score)
    }
}

struct ChrfUtility(MetricConfig);

impl Utility for ChrfUtility {
    fn name(&self) -> &str {
        "chrf"
    }

    fn evaluate(&self, h: &str, r: &str, _: &UtilityContext<'_>) -> Result<f64> {
        Ok(chrf(h, r, &self.0).score)
    }
}

/// `1 - |LC(h) - LC(r)|`: rewards matching the pseudo-reference's level of
/// cohesion rather than maximizing it.
struct LcUtility {
    filter: ContentWordFilter,
    synonyms: Option<SynonymLexicon>,
    raw: bool,
}

impl Utility for LcUtility {
    fn name(&self) -> &str {
        if self.raw {
            "lc_raw"
        } else {
            "lc"
        }
    }

    fn evaluate(&self, h: &str, r: &str, _: &UtilityContext<'_>) -> Result<f64> {
        let lc = |t: &str| lexical_cohesion_ratio(t, &self.filter, self.synonyms.as_ref());
        Ok(if self.raw { lc(h) } else { 1.0 - (lc(h) - lc(r)).abs() })
    }
}

/// Immutable name → utility map handed to the decoder.
#[derive(Clone, Default)]
pub struct UtilityRegistry {
    utilities: BTreeMap<String, UtilityFunction>,
}

impl UtilityRegistry {
    pub fn insert(&mut self, name: impl Into<String>, utility: UtilityFunction) {
        self.utilities.insert(name.into(), utility);
    }

    pub fn names(&self) -> Vec<&str> {
        self.utilities.keys().map(String::as_str).collect()
    }

    pub fn get(&self, name: &str) -> Result<UtilityFunction> {
        self.utilities.get(name).cloned().ok_or_else(|| Error::UnknownUtility {
            name: name.to_string(),
            available: self.names().into_iter().map(String::from).collect(),
        })
    }
}

impl std::fmt::Debug for UtilityRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UtilityRegistry").field("names", &self.names()).finish()
    }
}

/// Registers `bleu`, `chrf`, `lc`, `lc_raw`, and each external scorer as
/// `external:<name>`.
pub fn register_utilities(
    config: &MetricConfig,
    filter: ContentWordFilter,
    synonyms: Option<SynonymLexicon>,
    external: impl IntoIterator<Item = (String, UtilityFunction)>,
) -> Result<UtilityRegistry> {
    config.validate()?;
    let mut registry = UtilityRegistry::default();
    registry.insert("bleu", Arc::new(BleuUtility(config.clone())));
    registry.insert("chrf", Arc::new(ChrfUtility(config.clone())));
    registry.insert(
        "lc",
        Arc::new(LcUtility {
            filter: filter.clone(),
            synonyms: synonyms.clone(),
            raw: false,
        }),
    );
    registry.insert("lc_raw", Arc::new(LcUtility { filter, synonyms, raw: true }));
    for (name, utility) in external {
        registry.insert(format!("external:{name}"), utility);
    }
    Ok(registry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|w| w.to_string()).collect()
    }

    /// Independent device counter: a word is a device iff some earlier word
    /// equals it or shares its synonym group.
    fn brute_force(ws: &[String], syn: Option<&SynonymLexicon>) -> usize {
        (0..ws.len())
            .filter(|&i| {
                (0..i).any(|j| {
                    ws[j] == ws[i]
                        || syn.is_some_and(|s| s.group(&ws[i]).is_some() && s.group(&ws[i]) == s.group(&ws[j]))
                })
            })
            .count()
    }

    #[test]
    fn repetition_example() {
        let ws = words(&["economy", "growth", "economy", "economy"]);
        assert_eq!(cohesion_devices(&ws, None), 2);
        assert_eq!(brute_force(&ws, None), 2);
        assert_eq!(lexical_cohesion_ratio("economy growth economy economy", &ContentWordFilter::empty(), None), 0.5);
    }

    #[test]
    fn synonym_example() {
        let syn = SynonymLexicon::new(None, vec![words(&["growth", "expansion"])]).unwrap();
        assert_eq!(lexical_cohesion_ratio("growth expansion", &ContentWordFilter::empty(), Some(&syn)), 0.5);
        assert_eq!(lexical_cohesion_ratio("growth expansion", &ContentWordFilter::empty(), None), 0.0);
    }

    #[test]
    fn stopwords_and_empty() {
        let en = ContentWordFilter::builtin("en").unwrap();
        assert_eq!(en.content_words("The economy, and the economy."), vec!["economy", "economy"]);
        assert_eq!(lexical_cohesion_ratio("the and of", &en, None), 0.0);
        assert_eq!(lexical_cohesion_ratio("", &en, None), 0.0);
        assert_eq!(lexical_cohesion_ratio("red green blue", &en, None), 0.0);
    }

    #[test]
    fn builtin_stopwords_load() {
        for lang in ContentWordFilter::builtin_languages() {
            assert!(ContentWordFilter::builtin(lang).is_some());
        }
    }

    #[test]
    fn synonym_lexicon_validation() {
        assert!(SynonymLexicon::from_toml("groups = [[\"a\", \"b\"], [\"c\"]]").is_ok());
        assert!(SynonymLexicon::from_toml("groups = [[\"a\", \"b\"], [\"b\"]]").is_err());
        assert!(SynonymLexicon::from_toml("groups = [[\"Growth\"]]").is_err());
        assert!(ContentWordFilter::parse("The\n").is_err());
    }

    #[test]
    fn registry_lookups() {
        let reg = register_utilities(&MetricConfig::default(), ContentWordFilter::empty(), None, []).unwrap();
        let ctx = UtilityContext::default();
        let bleu = reg.get("bleu").unwrap();
        assert!((bleu.evaluate("a small test", "a small test", &ctx).unwrap() - 100.0).abs() < 1e-9);
        let lc = reg.get("lc").unwrap();
        assert_eq!(lc.evaluate("x y x y", "a b a b", &ctx).unwrap(), 1.0);
        assert_eq!(reg.get("lc_raw").unwrap().evaluate("x x", "a b", &ctx).unwrap(), 0.5);
        match reg.get("external:comet") {
            Err(Error::UnknownUtility { available, .. }) => assert!(available.iter().any(|n| n == "chrf")),
            other => panic!("unexpected {:?}", other.map(|u| u.name().to_string())),
        }
        assert!(Arc::ptr_eq(&reg.get("chrf").unwrap(), &reg.get("chrf").unwrap()));
    }

    fn word_list() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(prop::sample::select(vec!["alpha", "beta", "gamma", "delta", "Alpha", "GAMMA"]), 0..12)
            .prop_map(|v| v.into_iter().map(String::from).collect())
    }

    proptest! {
        #[test]
        fn ratio_properties(ws in word_list(), n in 1usize..10) {
            let text = ws.join(" ");
            let filter = ContentWordFilter::empty();
            let syn = SynonymLexicon::new(None, vec![words(&["alpha", "beta"])]).unwrap();
            let plain = lexical_cohesion_ratio(&text, &filter, None);
            let with_syn = lexical_cohesion_ratio(&text, &filter, Some(&syn));
            prop_assert!((0.0..=1.0).contains(&plain));
            prop_assert!(with_syn >= plain);
            prop_assert_eq!(plain, lexical_cohesion_ratio(&text.to_uppercase(), &filter, None));
            prop_assert_eq!(plain, lexical_cohesion_ratio(&text.to_lowercase(), &filter, None));
            let normalized = filter.content_words(&text);
            prop_assert_eq!(cohesion_devices(&normalized, Some(&syn)), brute_force(&normalized, Some(&syn)));
            let same = vec!["word"; n].join(" ");
            prop_assert_eq!(lexical_cohesion_ratio(&same, &filter, None), (n - 1) as f64 / n as f64);
        }
    }
}

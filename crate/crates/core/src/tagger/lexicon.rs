use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::Phenomenon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Case-insensitive whole-token match.
    Exact,
    /// Whole-token match where capitalization carries meaning.
    CaseSensitiveExact,
    /// Case-insensitive suffix; the token must be longer than the suffix.
    Suffix,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexEntry {
    pub form: String,
    #[serde(default = "default_mode")]
    pub mode: MatchMode,
}

fn default_mode() -> MatchMode {
    MatchMode::Exact
}

fn decapitalize(token: &str) -> String {
    let mut chars = token.chars();
    match chars.next() {
        Some(first) => first.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

impl LexEntry {
    pub fn new(form: impl Into<String>, mode: MatchMode) -> Self {
        LexEntry {
            form: form.into(),
            mode,
        }
    }

    /// Returns the lexeme and ambiguity flag when `token` (already stripped
    /// of punctuation) at position `index` matches this entry.
    pub fn matches(&self, token: &str, index: usize) -> Option<(String, bool)> {
        match self.mode {
            MatchMode::Exact => {
                let lower = token.to_lowercase();
                (lower == self.form.to_lowercase()).then_some((lower, false))
            }
            MatchMode::Suffix => {
                let lower = token.to_lowercase();
                let suffix = self.form.to_lowercase();
                (lower.chars().count() > suffix.chars().count() && lower.ends_with(&suffix))
                    .then_some((lower, false))
            }
            MatchMode::CaseSensitiveExact => {
                if token == self.form {
                    return Some((token.to_string(), index == 0));
                }
                if index == 0 && self.form == self.form.to_lowercase() && decapitalize(token) == self.form {
                    return Some((self.form.clone(), true));
                }
                None
            }
        }
    }
}

/// Per-language word lists for the lexicon-driven phenomena.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lexicon {
    /// Target language code the lists are written for, if declared.
    #[serde(default)]
    pub language: Option<String>,
    #[serde(default)]
    pub pronouns: Vec<LexEntry>,
    #[serde(default)]
    pub formality: Vec<LexEntry>,
    #[serde(default)]
    pub verb_form: Vec<LexEntry>,
}

macro_rules! builtin {
    ($($lang:literal),*) => {
        &[$(($lang, include_str!(concat!("../../resources/lexicons/", $lang, ".toml")))),*]
    };
}

/// Starter lexicons shipped with the crate. They are small, illustrative
/// lists, not curated linguistic resources.
const BUILTIN: &[(&str, &str)] = builtin!("ar", "de", "fr", "ko", "pt", "ru");

impl Lexicon {
    pub fn from_toml(text: &str) -> Result<Self> {
        let lexicon: Lexicon = toml::from_str(text)
            .map_err(|e| Error::Validation(format!("invalid lexicon: {}", e.message())))?;
        lexicon.validate()?;
        Ok(lexicon)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn builtin(language: &str) -> Option<Self> {
        BUILTIN
            .iter()
            .find(|(lang, _)| *lang == language)
            .map(|(_, text)| Self::from_toml(text).expect("bundled lexicon parses"))
    }

    pub fn builtin_languages() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(lang, _)| *lang)
    }

    pub fn validate(&self) -> Result<()> {
        for (phenomenon, entries) in self.lists() {
            for entry in entries {
                let form = entry.form.trim();
                if form.is_empty() || form != entry.form || form.contains(char::is_whitespace) {
                    return Err(Error::Validation(format!(
                        "{phenomenon} entry `{}` must be a single non-empty token",
                        entry.form
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn lists(&self) -> [(Phenomenon, &[LexEntry]); 3] {
        [
            (Phenomenon::Pronouns, &self.pronouns),
            (Phenomenon::Formality, &self.formality),
            (Phenomenon::VerbForm, &self.verb_form),
        ]
    }

    pub fn check_language(&self, target: &str) -> Result<()> {
        match &self.language {
            Some(lang) if lang != target => Err(Error::Validation(format!(
                "lexicon is for `{lang}` but the target language is `{target}`"
            ))),
            _ => Ok(()),
        }
    }
}

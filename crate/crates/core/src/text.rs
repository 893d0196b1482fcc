//! Whitespace tokenization and token normalisation shared by the tagger,
//! the cohesion metric and alignment bookkeeping.

/// Python's `str.split()` whitespace, which also treats the ASCII
/// information separators U+001C..U+001F as whitespace.
#[inline]
pub fn is_py_whitespace(c: char) -> bool {
    c.is_whitespace() || ('\u{1c}'..='\u{1f}').contains(&c)
}

/// Splits on runs of whitespace, dropping empty pieces.
pub fn split_whitespace(text: &str) -> Vec<&str> {
    text.split(is_py_whitespace).filter(|t| !t.is_empty()).collect()
}

/// Strips leading and trailing non-alphanumeric characters.
pub fn strip_punct(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Lowercased, punctuation-stripped form used as a matching key.
pub fn normalize(token: &str) -> String {
    strip_punct(token).to_lowercase()
}

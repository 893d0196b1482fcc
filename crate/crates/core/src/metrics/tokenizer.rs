use std::sync::OnceLock;

use regex::Regex;

use crate::text::split_whitespace;

fn rules() -> &'static [(Regex, &'static str); 4] {
    static RULES: OnceLock<[(Regex, &'static str); 4]> = OnceLock::new();
    RULES.get_or_init(|| {
        [
            // ASCII symbols
            (Regex::new(r"([\{-~\[-` -&\(-\+:-@/])").unwrap(), " ${1} "),
            // period and comma unless preceded by a digit
            (Regex::new(r"([^0-9])([\.,])").unwrap(), "${1} ${2} "),
            // period and comma unless followed by a digit
            (Regex::new(r"([\.,])([^0-9])").unwrap(), " ${1} ${2}"),
            // dash preceded by a digit
            (Regex::new(r"([0-9])(-)").unwrap(), "${1} ${2} "),
        ]
    })
}

/// The `13a` tokenizer of mteval-v13a / sacreBLEU. Case is preserved.
pub fn tokenize_13a(text: &str) -> Vec<String> {
    let mut line = text
        .replace("<skipped>", "")
        .replace("-\n", "")
        .replace('\n', " ");
    if line.contains('&') {
        line = line
            .replace("&quot;", "\"")
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">");
    }
    let mut line = format!(" {line} ");
    for (re, rep) in rules() {
        if let std::borrow::Cow::Owned(s) = re.replace_all(&line, *rep) {
            line = s;
        }
    }
    split_whitespace(&line).into_iter().map(str::to_owned).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_punctuation() {
        assert_eq!(tokenize_13a("Hello, world!"), ["Hello", ",", "world", "!"]);
    }

    #[test]
    fn trivial_inputs() {
        assert!(tokenize_13a("").is_empty());
        assert_eq!(tokenize_13a("abc"), ["abc"]);
    }

    #[test]
    fn numbers_keep_internal_separators() {
        assert_eq!(tokenize_13a("3.5 1,000"), ["3.5", "1,000"]);
        assert_eq!(tokenize_13a("2-3 end."), ["2", "-", "3", "end", "."]);
        assert_eq!(tokenize_13a("x &amp; y"), ["x", "&", "y"]);
    }
}

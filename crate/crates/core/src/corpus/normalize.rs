use serde::{Deserialize, Serialize};

pub const DEFAULT_NULL_TOKENS: &[&str] = &["", "null", "na", "n/a"];

/// Canonical cell form used for matching, containment and joins.
///
/// Lowercases, trims and collapses whitespace runs. Cells that end up empty
/// or equal (case-insensitively) to a null token become `None`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalizer {
    null_tokens: Vec<String>,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer::new(DEFAULT_NULL_TOKENS.iter().copied())
    }
}

impl Normalizer {
    pub fn new<I, S>(null_tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut tokens: Vec<String> = null_tokens
            .into_iter()
            .map(|t| collapse(&t.as_ref().to_lowercase()))
            .collect();
        tokens.sort();
        tokens.dedup();
        Normalizer {
            null_tokens: tokens,
        }
    }

    pub fn null_tokens(&self) -> &[String] {
        &self.null_tokens
    }

    pub fn normalize(&self, raw: &str) -> Option<String> {
        let folded = collapse(&raw.to_lowercase());
        if folded.is_empty() || self.null_tokens.binary_search(&folded).is_ok() {
            None
        } else {
            Some(folded)
        }
    }
}

fn collapse(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Normalize with the default null tokens.
pub fn normalize_cell(raw: &str) -> Option<String> {
    thread_local! {
        static DEFAULT: Normalizer = Normalizer::default();
    }
    DEFAULT.with(|n| n.normalize(raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn trims_and_lowercases() {
        assert_eq!(normalize_cell("  Walmart ").as_deref(), Some("walmart"));
    }

    #[test]
    fn null_tokens_any_case() {
        assert_eq!(normalize_cell("N/A"), None);
        assert_eq!(normalize_cell("NULL"), None);
        assert_eq!(normalize_cell("   "), None);
        assert_eq!(normalize_cell(""), None);
        assert_eq!(normalize_cell(" na "), None);
    }

    #[test]
    fn collapses_internal_whitespace() {
        assert_eq!(
            normalize_cell("UChicago   Hospital").as_deref(),
            Some("uchicago hospital")
        );
        assert_eq!(normalize_cell("a\t\n b").as_deref(), Some("a b"));
    }

    #[test]
    fn custom_tokens() {
        let n = Normalizer::new(["-", "None"]);
        assert_eq!(n.normalize("none"), None);
        assert_eq!(n.normalize("-"), None);
        assert_eq!(n.normalize("").as_deref(), None);
        assert_eq!(n.normalize("null").as_deref(), Some("null"));
    }

    proptest! {
        #[test]
        fn idempotent(raw in "\\PC{0,24}") {
            if let Some(once) = normalize_cell(&raw) {
                prop_assert_eq!(normalize_cell(&once), Some(once.clone()));
            }
        }

        #[test]
        fn never_empty_or_padded(raw in "[ a-zA-Z\\t]{0,16}") {
            if let Some(v) = normalize_cell(&raw) {
                prop_assert!(!v.is_empty());
                prop_assert_eq!(v.trim(), v.as_str());
                prop_assert!(!v.contains("  "));
            }
        }
    }
}

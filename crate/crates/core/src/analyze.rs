//! Text analysis shared by indexing and query processing.
//!
//! One analyzer is used everywhere — documents at index time, queries at
//! search time — so term statistics and query terms always agree. The chain
//! is deliberately small and deterministic: Unicode lowercasing, splitting on
//! every non-alphanumeric character, dropping empty fragments, and an
//! optional stopword filter (off by default). There is no stemming.

use std::collections::HashSet;

/// Tokenizer configuration.
///
/// The default analyzer keeps every token. A stopword list can be attached
/// for collections where boilerplate terms would otherwise dominate the
/// frequency statistics; the list is matched against already-lowercased
/// tokens.
#[derive(Debug, Clone, Default)]
pub struct Analyzer {
    stopwords: Option<HashSet<String>>,
}

impl Analyzer {
    /// Analyzer with no stopword filtering.
    pub fn new() -> Self {
        Self::default()
    }

    /// Analyzer that drops the given words after tokenization.
    ///
    /// Words are lowercased on the way in, so the list may be supplied in any
    /// case.
    pub fn with_stopwords<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let set = words
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .collect();
        Self {
            stopwords: Some(set),
        }
    }

    /// Split `text` into normalized tokens.
    ///
    /// Lowercases first (Unicode-aware), then splits on every character that
    /// is not alphanumeric. Digits survive: `"QD3_1"` becomes `["qd3", "1"]`.
    pub fn analyze(&self, text: &str) -> Vec<String> {
        let lowered = text.to_lowercase();
        lowered
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .filter(|t| match &self.stopwords {
                Some(set) => !set.contains(*t),
                None => true,
            })
            .map(str::to_string)
            .collect()
    }
}

/// Tokenize with the default analyzer (no stopwords).
pub fn analyze_text(text: &str) -> Vec<String> {
    Analyzer::new().analyze(text)
}

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::stopwords::StopwordList;

/// Ordered lowercase word tokens of one text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        debug_assert!(tokens.iter().all(|t| !t.is_empty()));
        TokenSequence(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    /// Unique tokens with stopwords removed.
    pub fn nonstop_set(&self, stopwords: &StopwordList) -> TokenSet {
        let items = self
            .0
            .iter()
            .filter(|t| !stopwords.contains(t))
            .cloned()
            .collect();
        TokenSet {
            items,
            stop_removed: true,
        }
    }

    /// Unique tokens, stopwords kept.
    pub fn to_set(&self) -> TokenSet {
        TokenSet {
            items: self.0.iter().cloned().collect(),
            stop_removed: false,
        }
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenSequence(iter.into_iter().map(Into::into).collect())
    }
}

/// Lowercases `text` and splits it on every maximal run of non-alphanumeric
/// characters.
pub fn tokenize(text: &str) -> TokenSequence {
    let lowered = text.to_lowercase();
    TokenSequence(
        lowered
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_owned)
            .collect(),
    )
}

/// Tokenizes and drops stopwords in one step.
pub fn nonstop_set(text: &str, stopwords: &StopwordList) -> TokenSet {
    tokenize(text).nonstop_set(stopwords)
}

/// An unordered word set. Sorted storage keeps every rendering deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSet {
    items: BTreeSet<String>,
    stop_removed: bool,
}

impl TokenSet {
    pub fn from_words<I, S>(words: I, stop_removed: bool) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenSet {
            items: words.into_iter().map(Into::into).collect(),
            stop_removed,
        }
    }

    pub fn items(&self) -> &BTreeSet<String> {
        &self.items
    }

    pub fn stop_removed(&self) -> bool {
        self.stop_removed
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.items.contains(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(String::as_str)
    }

    pub fn intersection(&self, other: &TokenSet) -> TokenSet {
        TokenSet {
            items: self.items.intersection(&other.items).cloned().collect(),
            stop_removed: self.stop_removed || other.stop_removed,
        }
    }

    pub fn difference(&self, other: &TokenSet) -> TokenSet {
        TokenSet {
            items: self.items.difference(&other.items).cloned().collect(),
            stop_removed: self.stop_removed,
        }
    }

    pub fn union(&self, other: &TokenSet) -> TokenSet {
        TokenSet {
            items: self.items.union(&other.items).cloned().collect(),
            stop_removed: self.stop_removed && other.stop_removed,
        }
    }

    pub fn is_disjoint(&self, other: &TokenSet) -> bool {
        self.items.is_disjoint(&other.items)
    }

    pub fn without(mut self, word: &str) -> TokenSet {
        self.items.remove(word);
        self
    }
}

impl fmt::Display for TokenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, w) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(w)?;
        }
        f.write_str("}")
    }
}

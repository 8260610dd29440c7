use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

/// Environment variable that may point at a replacement stopword file.
pub const STOPWORDS_ENV: &str = "CAPTION_XRAY_STOPWORDS";

const BUNDLED_ENGLISH: &str = include_str!("../../data/stopwords_en.txt");

/// Fixed English stopword list (the 179-word NLTK list), one word per line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    words: BTreeSet<String>,
}

impl StopwordList {
    pub fn english() -> Self {
        Self::parse(BUNDLED_ENGLISH)
    }

    /// Parses one word per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        StopwordList { words }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading stopwords {}", path.display()), e))?;
        Ok(Self::parse(&text))
    }

    /// The bundled list, unless [`STOPWORDS_ENV`] names another file.
    pub fn from_env_or_default() -> Result<Self> {
        match std::env::var_os(STOPWORDS_ENV) {
            Some(p) if !p.is_empty() => Self::from_file(Path::new(&p)),
            _ => Ok(Self::english()),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

impl Default for StopwordList {
    fn default() -> Self {
        Self::english()
    }
}

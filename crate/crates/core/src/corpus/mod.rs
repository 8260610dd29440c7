//! Corpus ingestion, tokenization and the stopword/token-set algebra shared by
//! metrics and the explanation tree.
//!
//! A corpus is a JSON-lines file, one [`CaptionRecord`] per line:
//!
//! ```text
//! {"image_id": "...", "style": "Anxious", "generation": "...",
//!  "other_generations": [{"style": "Happy", "text": "..."}],
//!  "dense_captions": ["...", "...", "...", "...", "..."],
//!  "ground_truths": ["..."], "error_label": "ResNext"}
//! ```
//!
//! `error_label` is optional and case-insensitive. Unknown keys are kept in
//! [`CaptionRecord::extra`] and written back out unchanged.

mod record;
mod stopwords;
mod text;

pub use record::{
    corpus_to_string, load_corpus, read_corpus, validate_record, write_corpus, CaptionRecord,
    StyledText, Suspect, DENSE_CAPTION_COUNT, MAX_GROUND_TRUTHS,
};
pub use stopwords::{StopwordList, STOPWORDS_ENV};
pub use text::{nonstop_set, tokenize, TokenSequence, TokenSet};

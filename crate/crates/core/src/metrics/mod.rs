//! Caption metrics: BLEU-1..4, ROUGE-L, CIDEr (with the Gaussian length
//! penalty), unique-word diversity, and the median BLEU-1 used by triage.
//!
//! BLEU is reported twice. `bleu1..bleu4` in the corpus block are corpus-level
//! (clipped counts summed over records, no smoothing); `sentence_bleu1..4` are
//! means of smoothed sentence scores.

mod bleu;
mod cider;
mod ngram;
mod rouge;

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{tokenize, CaptionRecord, TokenSequence};
use crate::error::{Error, Result};

pub use bleu::{bleu_n, corpus_bleu_n, BleuStats, MAX_BLEU_ORDER};
pub use cider::{
    cider, cider_sentence, CiderScores, IdfTable, CIDER_MAX_N, CIDER_SCALE, CIDER_SIGMA,
};
pub use rouge::{lcs_len, rouge_l, ROUGE_L_BETA};

/// Size of the union of all tokens, stopwords included.
pub fn unique_word_count<'a, I>(generations: I) -> usize
where
    I: IntoIterator<Item = &'a TokenSequence>,
{
    generations
        .into_iter()
        .flat_map(|g| g.iter())
        .collect::<BTreeSet<_>>()
        .len()
}

/// Median; an even count takes the mean of the two central values.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Argument("median of an empty list".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Ok(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// Tokenized candidate and references of a record.
pub fn record_pair(record: &CaptionRecord) -> (TokenSequence, Vec<TokenSequence>) {
    (
        tokenize(&record.generation),
        record.ground_truths.iter().map(|g| tokenize(g)).collect(),
    )
}

/// Sentence BLEU-1 of a record's generation against its ground truths.
pub fn sentence_bleu1(record: &CaptionRecord) -> Result<f64> {
    let (cand, refs) = record_pair(record);
    bleu_n(&cand, &refs, 1)
}

pub fn corpus_median_bleu1(corpus: &[CaptionRecord]) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::Argument("median BLEU-1 of an empty corpus".into()));
    }
    let scores = corpus
        .par_iter()
        .map(sentence_bleu1)
        .collect::<Result<Vec<_>>>()?;
    median(&scores)
}

/// IDF over every record's ground truths.
pub fn corpus_idf(corpus: &[CaptionRecord]) -> IdfTable {
    let refs: Vec<Vec<TokenSequence>> = corpus.iter().map(|r| record_pair(r).1).collect();
    IdfTable::from_references(refs.iter().map(Vec::as_slice))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordScores {
    pub image_id: String,
    pub style: String,
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    pub rouge_l: f64,
    pub cider: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusScores {
    pub record_count: usize,
    /// Aggregation used for `bleu1..bleu4`.
    pub bleu_aggregation: &'static str,
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    pub sentence_bleu1: f64,
    pub sentence_bleu2: f64,
    pub sentence_bleu3: f64,
    pub sentence_bleu4: f64,
    pub rouge_l: f64,
    /// Conventionally scaled (x10).
    pub cider: f64,
    pub unique_words: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub corpus: CorpusScores,
    pub records: Vec<RecordScores>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Scores every record and aggregates. Per-record work runs on the rayon pool;
/// output order follows the corpus.
pub fn score_corpus(corpus: &[CaptionRecord]) -> Result<MetricReport> {
    if corpus.is_empty() {
        return Err(Error::Argument("cannot score an empty corpus".into()));
    }
    let pairs: Vec<_> = corpus.par_iter().map(record_pair).collect();
    let idf = IdfTable::from_references(pairs.iter().map(|(_, r)| r.as_slice()));

    let scored = corpus
        .par_iter()
        .zip(pairs.par_iter())
        .map(|(rec, (cand, refs))| -> Result<(RecordScores, BleuStats)> {
            let stats = BleuStats::compute(cand, refs);
            Ok((
                RecordScores {
                    image_id: rec.image_id.clone(),
                    style: rec.style.clone(),
                    bleu1: stats.sentence_bleu(1),
                    bleu2: stats.sentence_bleu(2),
                    bleu3: stats.sentence_bleu(3),
                    bleu4: stats.sentence_bleu(4),
                    rouge_l: rouge_l(cand, refs)?,
                    cider: cider_sentence(cand, refs, &idf)?,
                },
                stats,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = BleuStats::default();
    for (_, s) in &scored {
        total.accumulate(s);
    }
    let records: Vec<RecordScores> = scored.into_iter().map(|(r, _)| r).collect();
    let corpus_scores = CorpusScores {
        record_count: records.len(),
        bleu_aggregation: "corpus",
        bleu1: total.corpus_bleu(1),
        bleu2: total.corpus_bleu(2),
        bleu3: total.corpus_bleu(3),
        bleu4: total.corpus_bleu(4),
        sentence_bleu1: mean(records.iter().map(|r| r.bleu1)),
        sentence_bleu2: mean(records.iter().map(|r| r.bleu2)),
        sentence_bleu3: mean(records.iter().map(|r| r.bleu3)),
        sentence_bleu4: mean(records.iter().map(|r| r.bleu4)),
        rouge_l: mean(records.iter().map(|r| r.rouge_l)),
        cider: mean(records.iter().map(|r| r.cider)),
        unique_words: unique_word_count(pairs.iter().map(|(c, _)| c)),
    };
    Ok(MetricReport {
        corpus: corpus_scores,
        records,
    })
}

impl MetricReport {
    /// One CSV row per record.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("writing CSV", e))?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::io("writing CSV", std::io::Error::other(e.to_string()))
}

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::TokenSequence;
use crate::error::{Error, Result};

use super::ngram::ngram_counts;

pub const CIDER_MAX_N: usize = 4;
/// Standard deviation of the Gaussian length penalty.
pub const CIDER_SIGMA: f64 = 6.0;
pub const CIDER_SCALE: f64 = 10.0;

/// Document frequencies of reference n-grams (n = 1..4). Each document is the
/// reference set of one record.
#[derive(Debug, Clone, Default)]
pub struct IdfTable {
    doc_freq: BTreeMap<Vec<String>, usize>,
    document_count: usize,
}

impl IdfTable {
    /// Builds the table from each record's references. Candidates never
    /// contribute.
    pub fn from_references<'a, I>(documents: I) -> Self
    where
        I: IntoIterator<Item = &'a [TokenSequence]>,
    {
        let mut table = IdfTable::default();
        for refs in documents {
            table.document_count += 1;
            let mut seen: BTreeMap<&[String], ()> = BTreeMap::new();
            for r in refs {
                for n in 1..=CIDER_MAX_N {
                    for g in ngram_counts(r.tokens(), n).into_keys() {
                        seen.insert(g, ());
                    }
                }
            }
            for g in seen.into_keys() {
                *table.doc_freq.entry(g.to_vec()).or_insert(0) += 1;
            }
        }
        table
    }

    pub fn document_count(&self) -> usize {
        self.document_count
    }

    pub fn document_frequency(&self, ngram: &[String]) -> usize {
        self.doc_freq.get(ngram).copied().unwrap_or(0)
    }

    /// `ln N - ln max(1, df)`; never negative.
    pub fn idf(&self, ngram: &[String]) -> f64 {
        let df = self.document_frequency(ngram).max(1) as f64;
        (self.document_count as f64).ln() - df.ln()
    }

    pub fn is_empty(&self) -> bool {
        self.document_count == 0
    }
}

/// tf-idf vectors of one sentence, one map per n-gram order.
struct TfIdf<'a> {
    vecs: Vec<BTreeMap<&'a [String], f64>>,
    norms: Vec<f64>,
    len: usize,
}

impl<'a> TfIdf<'a> {
    fn new(seq: &'a TokenSequence, idf: &IdfTable) -> Self {
        let mut vecs = Vec::with_capacity(CIDER_MAX_N);
        let mut norms = Vec::with_capacity(CIDER_MAX_N);
        for n in 1..=CIDER_MAX_N {
            let v: BTreeMap<&[String], f64> = ngram_counts(seq.tokens(), n)
                .into_iter()
                .map(|(g, tf)| (g, tf as f64 * idf.idf(g)))
                .collect();
            norms.push(v.values().map(|x| x * x).sum::<f64>().sqrt());
            vecs.push(v);
        }
        TfIdf {
            vecs,
            norms,
            len: seq.len(),
        }
    }

    fn similarity(&self, other: &TfIdf<'_>, order: usize) -> f64 {
        let (a, b) = (&self.vecs[order], &other.vecs[order]);
        let denom = self.norms[order] * other.norms[order];
        if denom == 0.0 {
            return 0.0;
        }
        let dot: f64 = a
            .iter()
            .filter_map(|(g, x)| b.get(g).map(|y| x * y))
            .sum();
        let delta = self.len as f64 - other.len as f64;
        let penalty = (-(delta * delta) / (2.0 * CIDER_SIGMA * CIDER_SIGMA)).exp();
        dot / denom * penalty
    }
}

/// Per-record CIDEr scores and their mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiderScores {
    pub per_record: Vec<f64>,
    pub mean: f64,
}

/// CIDEr of one candidate: mean over orders 1..4 of its length-penalized
/// tf-idf cosine, averaged over references, times ten.
pub fn cider_sentence(
    candidate: &TokenSequence,
    references: &[TokenSequence],
    idf: &IdfTable,
) -> Result<f64> {
    if idf.is_empty() {
        return Err(Error::Argument("CIDEr needs a non-empty IDF table".into()));
    }
    if references.is_empty() {
        return Err(Error::Argument("CIDEr needs at least one reference".into()));
    }
    let cand = TfIdf::new(candidate, idf);
    let refs: Vec<TfIdf<'_>> = references.iter().map(|r| TfIdf::new(r, idf)).collect();
    let mut total = 0.0;
    for order in 0..CIDER_MAX_N {
        let per_ref: f64 = refs.iter().map(|r| cand.similarity(r, order)).sum();
        total += per_ref / refs.len() as f64;
    }
    Ok(total / CIDER_MAX_N as f64 * CIDER_SCALE)
}

pub fn cider(records: &[(TokenSequence, Vec<TokenSequence>)], idf: &IdfTable) -> Result<CiderScores> {
    if idf.is_empty() {
        return Err(Error::Argument("CIDEr needs a non-empty IDF table".into()));
    }
    let per_record = records
        .iter()
        .map(|(c, refs)| cider_sentence(c, refs, idf))
        .collect::<Result<Vec<_>>>()?;
    let mean = if per_record.is_empty() {
        0.0
    } else {
        per_record.iter().sum::<f64>() / per_record.len() as f64
    };
    Ok(CiderScores { per_record, mean })
}

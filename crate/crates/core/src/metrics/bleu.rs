use std::collections::BTreeMap;

use crate::corpus::TokenSequence;
use crate::error::{Error, Result};

use super::ngram::ngram_counts;

pub const MAX_BLEU_ORDER: usize = 4;

/// Clipped n-gram statistics of one candidate against its references.
/// Summing these across records gives corpus-level BLEU.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BleuStats {
    pub matches: [usize; MAX_BLEU_ORDER],
    pub totals: [usize; MAX_BLEU_ORDER],
    pub candidate_len: usize,
    pub reference_len: usize,
}

impl BleuStats {
    pub fn compute(candidate: &TokenSequence, references: &[TokenSequence]) -> Self {
        let cand = candidate.tokens();
        let mut stats = BleuStats {
            candidate_len: cand.len(),
            reference_len: closest_reference_len(cand.len(), references),
            ..Default::default()
        };
        for n in 1..=MAX_BLEU_ORDER {
            let cand_counts = ngram_counts(cand, n);
            let mut max_ref: BTreeMap<&[String], usize> = BTreeMap::new();
            for r in references {
                for (g, c) in ngram_counts(r.tokens(), n) {
                    let e = max_ref.entry(g).or_insert(0);
                    *e = (*e).max(c);
                }
            }
            stats.matches[n - 1] = cand_counts
                .iter()
                .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
                .sum();
            stats.totals[n - 1] = cand_counts.values().sum();
        }
        stats
    }

    pub fn accumulate(&mut self, other: &BleuStats) {
        for i in 0..MAX_BLEU_ORDER {
            self.matches[i] += other.matches[i];
            self.totals[i] += other.totals[i];
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
    }

    fn brevity_penalty(&self) -> f64 {
        if self.candidate_len == 0 {
            return 0.0;
        }
        let ratio = self.reference_len as f64 / self.candidate_len as f64;
        (1.0 - ratio).exp().min(1.0)
    }

    /// Sentence BLEU-n: zero precisions of order two and up are replaced by
    /// `1 / (2 * candidate n-gram count)`.
    pub fn sentence_bleu(&self, n: usize) -> f64 {
        if self.candidate_len == 0 || self.matches[0] == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for i in 0..n {
            let p = if self.matches[i] > 0 {
                self.matches[i] as f64 / self.totals[i] as f64
            } else {
                // Candidates shorter than the order have no n-grams at all;
                // the count is floored at one.
                1.0 / (2.0 * self.totals[i].max(1) as f64)
            };
            log_sum += p.ln();
        }
        self.brevity_penalty() * (log_sum / n as f64).exp()
    }

    /// Unsmoothed BLEU-n over accumulated statistics.
    pub fn corpus_bleu(&self, n: usize) -> f64 {
        if self.candidate_len == 0 || self.matches[..n].contains(&0) {
            return 0.0;
        }
        let log_sum: f64 = (0..n)
            .map(|i| (self.matches[i] as f64 / self.totals[i] as f64).ln())
            .sum();
        self.brevity_penalty() * (log_sum / n as f64).exp()
    }
}

/// Reference length closest to `candidate_len`; ties go to the shorter one.
fn closest_reference_len(candidate_len: usize, references: &[TokenSequence]) -> usize {
    references
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| (len.abs_diff(candidate_len), len))
        .unwrap_or(0)
}

fn check_order(n: usize) -> Result<()> {
    if (1..=MAX_BLEU_ORDER).contains(&n) {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "BLEU order must be in 1..={MAX_BLEU_ORDER}, got {n}"
        )))
    }
}

/// Sentence-level BLEU-n of `candidate` against `references`.
pub fn bleu_n(candidate: &TokenSequence, references: &[TokenSequence], n: usize) -> Result<f64> {
    check_order(n)?;
    if references.is_empty() {
        return Err(Error::Argument("BLEU needs at least one reference".into()));
    }
    Ok(BleuStats::compute(candidate, references).sentence_bleu(n))
}

/// Corpus-level BLEU-n over (candidate, references) pairs.
pub fn corpus_bleu_n(pairs: &[(TokenSequence, Vec<TokenSequence>)], n: usize) -> Result<f64> {
    check_order(n)?;
    let mut total = BleuStats::default();
    for (cand, refs) in pairs {
        if refs.is_empty() {
            return Err(Error::Argument("BLEU needs at least one reference".into()));
        }
        total.accumulate(&BleuStats::compute(cand, refs));
    }
    Ok(total.corpus_bleu(n))
}

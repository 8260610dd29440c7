//! Low-performer selection and best-style ranking.
//!
//! A record is a low performer when its sentence BLEU-1 is strictly below the
//! corpus median. Styles are ranked by mean sentence BLEU-1 (ties broken by
//! name), and the best styles are the top `k` whose mean beats the median.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::CaptionRecord;
use crate::error::{Error, Result};
use crate::metrics::{median, sentence_bleu1};

pub const DEFAULT_BEST_STYLES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StyleRank {
    pub style: String,
    pub mean_bleu1: f64,
    pub count: usize,
}

/// Styles sorted by descending mean sentence BLEU-1.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct StyleRanking {
    pub entries: Vec<StyleRank>,
}

impl StyleRanking {
    pub fn styles(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.style.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriageSet {
    pub threshold: f64,
    /// Indices into the corpus, in corpus order.
    pub low_performers: Vec<usize>,
}

pub fn bleu1_scores(corpus: &[CaptionRecord]) -> Result<Vec<f64>> {
    corpus.par_iter().map(sentence_bleu1).collect()
}

pub fn select_low_performers_from_scores(scores: &[f64]) -> Result<TriageSet> {
    if scores.is_empty() {
        return Err(Error::Argument("cannot triage an empty corpus".into()));
    }
    let threshold = median(scores)?;
    let low_performers = scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < threshold)
        .map(|(i, _)| i)
        .collect();
    Ok(TriageSet {
        threshold,
        low_performers,
    })
}

pub fn select_low_performers(corpus: &[CaptionRecord]) -> Result<TriageSet> {
    if corpus.is_empty() {
        return Err(Error::Argument("cannot triage an empty corpus".into()));
    }
    select_low_performers_from_scores(&bleu1_scores(corpus)?)
}

pub fn rank_styles_from_scores(corpus: &[CaptionRecord], scores: &[f64]) -> StyleRanking {
    assert_eq!(corpus.len(), scores.len());
    let mut per_style: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (rec, &s) in corpus.iter().zip(scores) {
        per_style.entry(rec.style.as_str()).or_default().push(s);
    }
    let mut entries: Vec<StyleRank> = per_style
        .into_iter()
        .map(|(style, mut v)| {
            // Summing in sorted order makes the mean independent of record order.
            v.sort_by(f64::total_cmp);
            StyleRank {
                style: style.to_owned(),
                mean_bleu1: v.iter().sum::<f64>() / v.len() as f64,
                count: v.len(),
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        b.mean_bleu1
            .total_cmp(&a.mean_bleu1)
            .then_with(|| a.style.cmp(&b.style))
    });
    StyleRanking { entries }
}

pub fn rank_styles(corpus: &[CaptionRecord]) -> Result<StyleRanking> {
    Ok(rank_styles_from_scores(corpus, &bleu1_scores(corpus)?))
}

/// Top `k` styles whose mean BLEU-1 is strictly above `median`.
pub fn select_best_styles(ranking: &StyleRanking, k: usize, median: f64) -> Vec<String> {
    ranking
        .entries
        .iter()
        .filter(|e| e.mean_bleu1 > median)
        .take(k)
        .map(|e| e.style.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowPerformer {
    pub image_id: String,
    pub style: String,
    pub bleu1: f64,
}

/// Everything the `triage` command reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriageReport {
    pub threshold: f64,
    pub bleu1_aggregation: &'static str,
    pub low_performer_ids: Vec<LowPerformer>,
    pub style_ranking: StyleRanking,
    pub best_styles: Vec<String>,
    #[serde(skip)]
    pub low_performer_indices: Vec<usize>,
}

pub fn triage(corpus: &[CaptionRecord], k: usize) -> Result<TriageReport> {
    if k == 0 {
        return Err(Error::Argument("--best-styles must be at least 1".into()));
    }
    let scores = bleu1_scores(corpus)?;
    let set = select_low_performers_from_scores(&scores)?;
    let ranking = rank_styles_from_scores(corpus, &scores);
    let best_styles = select_best_styles(&ranking, k, set.threshold);
    Ok(TriageReport {
        threshold: set.threshold,
        bleu1_aggregation: "mean sentence BLEU-1",
        low_performer_ids: set
            .low_performers
            .iter()
            .map(|&i| LowPerformer {
                image_id: corpus[i].image_id.clone(),
                style: corpus[i].style.clone(),
                bleu1: scores[i],
            })
            .collect(),
        style_ranking: ranking,
        best_styles,
        low_performer_indices: set.low_performers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rank(entries: &[(&str, f64)]) -> StyleRanking {
        StyleRanking {
            entries: entries
                .iter()
                .map(|&(s, m)| StyleRank {
                    style: s.into(),
                    mean_bleu1: m,
                    count: 1,
                })
                .collect(),
        }
    }

    #[test]
    fn strict_below_median() {
        let t = select_low_performers_from_scores(&[0.2, 0.5, 0.8]).unwrap();
        assert_eq!(t.threshold, 0.5);
        assert_eq!(t.low_performers, vec![0]);

        let t = select_low_performers_from_scores(&[0.4; 6]).unwrap();
        assert!(t.low_performers.is_empty());

        assert!(select_low_performers_from_scores(&[]).is_err());
        assert!(select_low_performers(&[]).is_err());
    }

    #[test]
    fn best_styles_shortfall_and_prefix() {
        let r = rank(&[
            ("A", 0.9),
            ("B", 0.8),
            ("C", 0.7),
            ("D", 0.6),
            ("E", 0.55),
            ("F", 0.52),
            ("G", 0.51),
            ("H", 0.3),
        ]);
        assert_eq!(select_best_styles(&r, 5, 0.5), vec!["A", "B", "C", "D", "E"]);
        assert_eq!(select_best_styles(&r, 5, 0.75), vec!["A", "B"]);
        for k in 1..8 {
            let small = select_best_styles(&r, k, 0.5);
            let big = select_best_styles(&r, k + 1, 0.5);
            assert!(big.starts_with(&small));
        }
    }
}

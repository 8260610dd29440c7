//! Two-view decision-tree error attribution.
//!
//! The current generation is walked through a five-node word-set tree
//! (leaves A-F); the alternate-style generations are walked through the same
//! tree and aggregated by modal leaf (leaves 1-6). The leaf pair indexes a
//! fixed 6x6 rule table giving an ordered pair of suspected error sources.

mod accuracy;
mod explain;
mod rules;
mod tree;

use rayon::prelude::*;

use crate::corpus::{CaptionRecord, StopwordList};
use crate::error::Result;

pub use accuracy::{evaluate_accuracy, is_correct, AccuracyMode, AccuracyReport, ScoredEstimate};
pub use explain::{estimate_record, explain_record, record_sets, union_set, AlternateLeaf, Explanation};
pub use rules::{lookup, rule_lookup, ErrorEstimate, SuspectPair, RULE_TABLE};
pub use tree::{
    eval_view, second_view, second_view_detailed, Leaf, NodeStep, View, ViewLeaf, LEAF_COUNT,
    UNK_TOKEN,
};

/// Explains each selected record. Failures stay per-record.
pub fn explain_all(
    corpus: &[CaptionRecord],
    indices: &[usize],
    best_styles: &[String],
    stopwords: &StopwordList,
) -> Vec<Result<Explanation>> {
    indices
        .par_iter()
        .map(|&i| explain_record(&corpus[i], best_styles, stopwords))
        .collect()
}

/// Pairs labels with explanation outcomes for [`evaluate_accuracy`].
pub fn scored_estimates(
    corpus: &[CaptionRecord],
    indices: &[usize],
    outcomes: &[Result<Explanation>],
) -> Vec<ScoredEstimate> {
    indices
        .iter()
        .zip(outcomes)
        .map(|(&i, o)| ScoredEstimate {
            label: corpus[i].error_label,
            unrecognized_label: corpus[i].unrecognized_label().is_some(),
            estimate: o.as_ref().ok().map(|e| (e.first, e.second)),
        })
        .collect()
}

use serde::Serialize;

use crate::corpus::{nonstop_set, CaptionRecord, StopwordList, Suspect, TokenSet};
use crate::error::{Error, Result};

use super::rules::{rule_lookup, ErrorEstimate};
use super::tree::{eval_view, second_view_detailed, Leaf, View};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlternateLeaf {
    pub style: String,
    pub leaf: String,
}

/// Serialized form of one record's explanation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Explanation {
    pub image_id: String,
    pub style: String,
    pub leaf_v1: String,
    pub leaf_v2: String,
    pub first: Suspect,
    pub second: Suspect,
    pub trace_v1: Vec<String>,
    pub trace_v2: Vec<String>,
    pub alternates: Vec<AlternateLeaf>,
    pub narrative: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_label: Option<Suspect>,
}

/// Union of the nonstop sets of several texts.
pub fn union_set<'a, I>(texts: I, stopwords: &StopwordList) -> TokenSet
where
    I: IntoIterator<Item = &'a String>,
{
    texts
        .into_iter()
        .fold(TokenSet::from_words(Vec::<String>::new(), true), |acc, t| {
            acc.union(&nonstop_set(t, stopwords))
        })
}

/// The three word sets of the first view: (generation, dense captions, ground truth).
pub fn record_sets(record: &CaptionRecord, stopwords: &StopwordList) -> (TokenSet, TokenSet, TokenSet) {
    (
        nonstop_set(&record.generation, stopwords),
        union_set(&record.dense_captions, stopwords),
        union_set(&record.ground_truths, stopwords),
    )
}

/// Runs both views for `record`, using its generations for `best_styles`
/// (missing styles are skipped), and maps the leaf pair through the rule table.
pub fn estimate_record(
    record: &CaptionRecord,
    best_styles: &[String],
    stopwords: &StopwordList,
) -> Result<(ErrorEstimate, Vec<AlternateLeaf>)> {
    let (gen, cap, gd) = record_sets(record, stopwords);
    let alternates: Vec<(&str, TokenSet)> = best_styles
        .iter()
        .filter_map(|s| {
            record
                .generation_for(s)
                .map(|text| (s.as_str(), nonstop_set(text, stopwords)))
        })
        .collect();
    if alternates.is_empty() {
        return Err(Error::Explanation {
            image_id: record.image_id.clone(),
            style: record.style.clone(),
            reason: format!(
                "no generation for any of the best styles [{}]",
                best_styles.join(", ")
            ),
        });
    }
    let sets: Vec<TokenSet> = alternates.iter().map(|(_, s)| s.clone()).collect();
    let v1 = eval_view(&gen, &cap, &gd);
    let (v2, leaves) = second_view_detailed(&sets, &cap, &gd)?;
    let alt_leaves = alternates
        .iter()
        .zip(leaves)
        .map(|((style, _), leaf)| AlternateLeaf {
            style: (*style).to_owned(),
            leaf: leaf.label(View::Alternates),
        })
        .collect();
    Ok((rule_lookup(v1, v2), alt_leaves))
}

fn leaf_gloss(leaf: Leaf) -> &'static str {
    match leaf.index() {
        0 => "uses dense-caption words that are mostly confirmed by the ground truth",
        1 => "uses dense-caption words that are mostly absent from the ground truth",
        2 => "matches the ground truth only with words absent from the dense captions",
        3 => "shares words with the dense captions but none with the ground truth",
        4 => "ignores the dense captions yet still matches some ground-truth words",
        _ => "matches neither the dense captions nor the ground truth",
    }
}

fn narrative(record: &CaptionRecord, est: &ErrorEstimate, n_alternates: usize) -> String {
    let (v1, v2) = &est.verdict;
    format!(
        "The {style} generation reached leaf {l1}: it {g1}. Across {n} alternate-style \
         generation(s) the most common outcome was leaf {l2}: they {g2}. Suspected error \
         source: {first}, otherwise {second}.",
        style = record.style,
        l1 = v1.label(),
        g1 = leaf_gloss(v1.leaf),
        n = n_alternates,
        l2 = v2.label(),
        g2 = leaf_gloss(v2.leaf),
        first = est.first,
        second = est.second,
    )
}

pub fn explain_record(
    record: &CaptionRecord,
    best_styles: &[String],
    stopwords: &StopwordList,
) -> Result<Explanation> {
    let (est, alternates) = estimate_record(record, best_styles, stopwords)?;
    let (v1, v2) = &est.verdict;
    Ok(Explanation {
        image_id: record.image_id.clone(),
        style: record.style.clone(),
        leaf_v1: v1.label(),
        leaf_v2: v2.label(),
        first: est.first,
        second: est.second,
        trace_v1: v1.trace_lines(),
        trace_v2: v2.trace_lines(),
        narrative: narrative(record, &est, alternates.len()),
        alternates,
        error_label: record.error_label,
    })
}

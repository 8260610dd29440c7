use std::collections::BTreeMap;

/// Counts of the length-`n` windows of `tokens`.
pub(crate) fn ngram_counts<S: Ord>(tokens: &[S], n: usize) -> BTreeMap<&[S], usize> {
    let mut counts = BTreeMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

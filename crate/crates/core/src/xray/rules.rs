use serde::Serialize;

use crate::corpus::Suspect;

use super::tree::{Leaf, ViewLeaf, LEAF_COUNT};

use Suspect::{Caption as Cap, Other as Oth, ResNext as Res, Style as Sty};

/// Leaf-pair to suspect-pair table. Rows are current-view leaves A-F, columns
/// alternate-view leaves 1-6.
pub const RULE_TABLE: [[(Suspect, Suspect); LEAF_COUNT]; LEAF_COUNT] = [
    // A
    [(Sty, Oth), (Sty, Oth), (Sty, Oth), (Res, Oth), (Sty, Oth), (Res, Oth)],
    // B
    [(Sty, Cap), (Cap, Oth), (Sty, Cap), (Cap, Oth), (Sty, Cap), (Res, Cap)],
    // C
    [(Sty, Cap), (Cap, Oth), (Res, Oth), (Cap, Oth), (Cap, Sty), (Res, Cap)],
    // D
    [(Sty, Cap), (Cap, Oth), (Cap, Sty), (Cap, Oth), (Cap, Sty), (Res, Cap)],
    // E
    [(Sty, Oth), (Cap, Oth), (Sty, Res), (Cap, Oth), (Sty, Oth), (Res, Oth)],
    // F
    [(Sty, Oth), (Sty, Cap), (Sty, Cap), (Sty, Cap), (Sty, Res), (Sty, Res)],
];

/// Ordered pair of suspected error sources for one record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorEstimate {
    pub first: Suspect,
    pub second: Suspect,
    pub verdict: (ViewLeaf, ViewLeaf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SuspectPair {
    pub first: Suspect,
    pub second: Suspect,
}

pub fn lookup(current: Leaf, alternates: Leaf) -> SuspectPair {
    let (first, second) = RULE_TABLE[current.index()][alternates.index()];
    SuspectPair { first, second }
}

pub fn rule_lookup(v1: ViewLeaf, v2: ViewLeaf) -> ErrorEstimate {
    let SuspectPair { first, second } = lookup(v1.leaf, v2.leaf);
    ErrorEstimate {
        first,
        second,
        verdict: (v1, v2),
    }
}

impl ErrorEstimate {
    pub fn names(&self, label: Suspect) -> bool {
        self.first == label || self.second == label
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_cells() {
        let p = |a: Leaf, b: usize| {
            let s = lookup(a, Leaf::new(b - 1).unwrap());
            (s.first, s.second)
        };
        assert_eq!(p(Leaf::A, 1), (Sty, Oth));
        assert_eq!(p(Leaf::C, 3), (Res, Oth));
        assert_eq!(p(Leaf::F, 1), (Sty, Oth));
        assert_eq!(p(Leaf::B, 6), (Res, Cap));
        assert_eq!(p(Leaf::F, 6), (Sty, Res));
    }
}

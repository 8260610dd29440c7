use std::fmt;

use serde::{Serialize, Serializer};

use crate::corpus::TokenSet;
use crate::error::{Error, Result};

/// Token excluded from every tree set; it carries no lexical evidence.
pub const UNK_TOKEN: &str = "unk";

pub const LEAF_COUNT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum View {
    /// Current generation, leaves A-F.
    Current,
    /// Alternate-style generations, leaves 1-6.
    Alternates,
}

/// A leaf index 0..6, rendered as A-F or 1-6 depending on the view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Leaf(u8);

impl Leaf {
    pub fn new(index: usize) -> Result<Self> {
        if index < LEAF_COUNT {
            Ok(Leaf(index as u8))
        } else {
            Err(Error::Argument(format!("leaf index {index} out of range")))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn letter(self) -> char {
        (b'A' + self.0) as char
    }

    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn label(self, view: View) -> String {
        match view {
            View::Current => self.letter().to_string(),
            View::Alternates => self.number().to_string(),
        }
    }

    /// Parses `A`-`F` or `1`-`6`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c @ 'A'..='F'), None) => Leaf::new((c as u8 - b'A') as usize),
            (Some(c @ 'a'..='f'), None) => Leaf::new((c as u8 - b'a') as usize),
            (Some(c @ '1'..='6'), None) => Leaf::new((c as u8 - b'1') as usize),
            _ => Err(Error::Argument(format!("not a leaf: {s:?}"))),
        }
    }

    pub const A: Leaf = Leaf(0);
    pub const B: Leaf = Leaf(1);
    pub const C: Leaf = Leaf(2);
    pub const D: Leaf = Leaf(3);
    pub const E: Leaf = Leaf(4);
    pub const F: Leaf = Leaf(5);
}

/// Outcome of one visited split node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeStep {
    pub node: u8,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for NodeStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Node{} {}: {}",
            self.node,
            if self.passed { "yes" } else { "no" },
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewLeaf {
    pub view: View,
    pub leaf: Leaf,
    pub trace: Vec<NodeStep>,
}

impl ViewLeaf {
    pub fn label(&self) -> String {
        self.leaf.label(self.view)
    }

    pub fn relabel(mut self, view: View) -> Self {
        self.view = view;
        self
    }

    pub fn trace_lines(&self) -> Vec<String> {
        self.trace.iter().map(ToString::to_string).collect()
    }
}

impl Serialize for Leaf {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.0)
    }
}

fn clean(set: &TokenSet) -> TokenSet {
    set.clone().without(UNK_TOKEN)
}

/// Walks the five-node tree for one generation word set against the dense
/// caption set `cap` and ground-truth set `gd`.
///
/// ```text
/// Node1  gen∩cap ≠ ∅ ?
///   yes  Node2  gen∩cap∩gd ≠ ∅ ?
///          yes  Node3  |gen∩cap∩gd| ≥ |(gen∩cap)\gd| ?   yes A, no B
///          no   Node4  gen∩gd ≠ ∅ ?                      yes C, no D
///   no   Node5  gen∩gd ≠ ∅ ?                             yes E, no F
/// ```
///
/// Node3 counts ties as non-noisy. The literal token `unk` is dropped from
/// all three sets first.
pub fn eval_view(gen: &TokenSet, cap: &TokenSet, gd: &TokenSet) -> ViewLeaf {
    let (gen, cap, gd) = (clean(gen), clean(cap), clean(gd));
    let mut trace = Vec::with_capacity(3);
    let gen_cap = gen.intersection(&cap);
    let gen_gd = gen.intersection(&gd);

    let leaf = if !gen_cap.is_empty() {
        trace.push(NodeStep {
            node: 1,
            passed: true,
            detail: format!("generation shares {gen_cap} with the dense captions"),
        });
        let supported = gen_cap.intersection(&gd);
        if !supported.is_empty() {
            trace.push(NodeStep {
                node: 2,
                passed: true,
                detail: format!("caption-shared words {supported} are in the ground truth"),
            });
            let unsupported = gen_cap.difference(&gd);
            let ok = supported.len() >= unsupported.len();
            trace.push(NodeStep {
                node: 3,
                passed: ok,
                detail: format!(
                    "{} caption-shared words in the ground truth vs {} not ({unsupported})",
                    supported.len(),
                    unsupported.len()
                ),
            });
            if ok {
                Leaf::A
            } else {
                Leaf::B
            }
        } else {
            trace.push(NodeStep {
                node: 2,
                passed: false,
                detail: "none of the caption-shared words are in the ground truth".into(),
            });
            let hit = !gen_gd.is_empty();
            trace.push(NodeStep {
                node: 4,
                passed: hit,
                detail: if hit {
                    format!("ground-truth words {gen_gd} come from outside the dense captions")
                } else {
                    "generation has no ground-truth words".into()
                },
            });
            if hit {
                Leaf::C
            } else {
                Leaf::D
            }
        }
    } else {
        trace.push(NodeStep {
            node: 1,
            passed: false,
            detail: "generation shares no words with the dense captions".into(),
        });
        let hit = !gen_gd.is_empty();
        trace.push(NodeStep {
            node: 5,
            passed: hit,
            detail: if hit {
                format!("generation still matches ground-truth words {gen_gd}")
            } else {
                "generation has no ground-truth words".into()
            },
        });
        if hit {
            Leaf::E
        } else {
            Leaf::F
        }
    };
    ViewLeaf {
        view: View::Current,
        leaf,
        trace,
    }
}

/// Evaluates every alternate and keeps the modal leaf, ties going to the
/// smaller leaf. The returned trace is that of the first alternate reaching
/// the winning leaf. Also returns each alternate's leaf in input order.
pub fn second_view_detailed(
    others: &[TokenSet],
    cap: &TokenSet,
    gd: &TokenSet,
) -> Result<(ViewLeaf, Vec<Leaf>)> {
    if others.is_empty() {
        return Err(Error::Argument(
            "second view needs at least one alternate generation".into(),
        ));
    }
    let views: Vec<ViewLeaf> = others.iter().map(|o| eval_view(o, cap, gd)).collect();
    let mut counts = [0usize; LEAF_COUNT];
    for v in &views {
        counts[v.leaf.index()] += 1;
    }
    // max_by_key keeps the last maximum, so scan from the highest leaf down.
    let winner = (0..LEAF_COUNT)
        .rev()
        .max_by_key(|&i| counts[i])
        .expect("six leaves");
    let leaves = views.iter().map(|v| v.leaf).collect();
    let chosen = views
        .into_iter()
        .find(|v| v.leaf.index() == winner)
        .expect("winner has a nonzero count");
    Ok((chosen.relabel(View::Alternates), leaves))
}

pub fn second_view(others: &[TokenSet], cap: &TokenSet, gd: &TokenSet) -> Result<ViewLeaf> {
    second_view_detailed(others, cap, gd).map(|(v, _)| v)
}

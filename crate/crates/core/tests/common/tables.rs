//! Loaders for the rule-table and tree-trace fixtures.

use caption_xray::corpus::{nonstop_set, StopwordList, Suspect, TokenSet};
use caption_xray::xray::Leaf;

use super::fixture_path;

fn parse_cell(cell: &str) -> (Suspect, Suspect) {
    let (a, b) = cell.split_once(',').expect("cell holds two suspects");
    (a.parse().unwrap(), b.parse().unwrap())
}

/// (current leaf, alternate leaf, suspects) for all 36 transcribed cells.
pub fn rule_table() -> Vec<(Leaf, Leaf, (Suspect, Suspect))> {
    let mut rdr = csv::Reader::from_path(fixture_path("rule_table.csv")).unwrap();
    let mut cells = Vec::new();
    for row in rdr.records() {
        let row = row.unwrap();
        let current = Leaf::parse(&row[0]).unwrap();
        for col in 1..=6 {
            cells.push((current, Leaf::parse(&col.to_string()).unwrap(), parse_cell(&row[col])));
        }
    }
    cells
}

pub fn rule_cell(current: &str, alternates: &str) -> (Suspect, Suspect) {
    let (c, a) = (Leaf::parse(current).unwrap(), Leaf::parse(alternates).unwrap());
    rule_table().into_iter().find(|(x, y, _)| *x == c && *y == a).unwrap().2
}

pub struct Trace {
    pub name: String,
    pub gen: TokenSet,
    pub cap: TokenSet,
    pub gd: TokenSet,
    pub leaf: String,
    /// (node, passed) in visiting order.
    pub nodes: Vec<(u8, bool)>,
}

fn union(texts: &str, sw: &StopwordList) -> TokenSet {
    texts
        .split('|')
        .fold(TokenSet::default(), |acc, t| acc.union(&nonstop_set(t, sw)))
}

pub fn tree_traces() -> Vec<Trace> {
    let sw = StopwordList::english();
    let mut rdr = csv::Reader::from_path(fixture_path("tree_traces.csv")).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            Trace {
                name: r[0].to_string(),
                gen: nonstop_set(&r[1], &sw),
                cap: union(&r[2], &sw),
                gd: nonstop_set(&r[3], &sw),
                leaf: r[4].to_string(),
                nodes: r[5]
                    .split(' ')
                    .map(|s| (s[..1].parse().unwrap(), s.ends_with('+')))
                    .collect(),
            }
        })
        .collect()
}

/// Alternates of the W1-analog trace: both reach leaf 1.
pub const W1_ALTERNATES: [&str; 2] = ["climber rope rock happy", "calm rock sky view"];

#![allow(dead_code)]

pub mod fusion;
pub mod oracles;
pub mod tables;

use caption_xray::corpus::{CaptionRecord, StyledText, Suspect};

pub fn record(image_id: &str, style: &str, generation: &str, ground_truths: &[&str]) -> CaptionRecord {
    CaptionRecord {
        image_id: image_id.into(),
        style: style.into(),
        generation: generation.into(),
        other_generations: Vec::new(),
        dense_captions: vec!["region one".into(); 5],
        ground_truths: ground_truths.iter().map(|s| s.to_string()).collect(),
        error_label: None,
        extra: Default::default(),
    }
}

pub fn with_alternates(mut r: CaptionRecord, alts: &[(&str, &str)]) -> CaptionRecord {
    r.other_generations = alts
        .iter()
        .map(|(s, t)| StyledText {
            style: s.to_string(),
            text: t.to_string(),
        })
        .collect();
    r
}

pub fn with_label(mut r: CaptionRecord, label: Suspect) -> CaptionRecord {
    r.error_label = Some(label);
    r
}

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

const REFERENCE: [&str; 4] = ["lamp", "road", "cart", "tower"];
const MISSES: [&str; 4] = ["vine", "fern", "reed", "moss"];

/// Four-token generation sharing exactly `matches` tokens with a four-token
/// reference, so its sentence BLEU-1 is `matches / 4`.
pub fn bleu_record(image_id: &str, style: &str, matches: usize) -> CaptionRecord {
    let gen: Vec<&str> = REFERENCE[..matches].iter().chain(&MISSES[matches..]).copied().collect();
    record(image_id, style, &gen.join(" "), &[&REFERENCE.join(" ")])
}

/// Twenty-token generation against a twenty-token reference with exactly
/// `matches` shared tokens: BLEU-1 is `matches / 20`.
pub fn twentieths_record(image_id: &str, matches: usize) -> CaptionRecord {
    let reference: Vec<String> = (0..20).map(|i| format!("ref{i}")).collect();
    let gen: Vec<String> = (0..20)
        .map(|i| if i < matches { format!("ref{i}") } else { format!("gen{i}") })
        .collect();
    record(image_id, "Happy", &gen.join(" "), &[&reference.join(" ")])
}

/// (style, matches per record). Hand ranking: Wry 1.0, Bold 0.75, Zen 0.75,
/// Apt 0.625, Keen 0.625, Mild 0.5, Dry 0.125. The fourteen BLEU-1 values
/// have median 0.625, so Apt and Keen tie the median and are not best styles.
pub const TRIAGE_PLAN: [(&str, &[usize]); 7] = [
    ("Zen", &[4, 2]),
    ("Bold", &[3, 3]),
    ("Apt", &[4, 1]),
    ("Keen", &[3, 2]),
    ("Mild", &[2, 2]),
    ("Dry", &[1, 0]),
    ("Wry", &[4, 4]),
];
pub const TRIAGE_MEDIAN: f64 = 0.625;
pub const TRIAGE_RANKING: [&str; 7] = ["Wry", "Bold", "Zen", "Apt", "Keen", "Mild", "Dry"];
pub const TRIAGE_BEST: [&str; 3] = ["Wry", "Bold", "Zen"];

pub fn triage_fixture() -> Vec<CaptionRecord> {
    let mut out = Vec::new();
    for (style, ms) in TRIAGE_PLAN {
        for (j, &m) in ms.iter().enumerate() {
            out.push(bleu_record(&format!("{style}{j}"), style, m));
        }
    }
    out
}

/// Records of the triage fixture below 0.625, i.e. with at most two matches.
pub fn triage_expected_low(corpus: &[CaptionRecord]) -> Vec<usize> {
    let below = ["Zen1", "Apt1", "Keen1", "Mild0", "Mild1", "Dry0", "Dry1"];
    (0..corpus.len()).filter(|&i| below.contains(&corpus[i].image_id.as_str())).collect()
}

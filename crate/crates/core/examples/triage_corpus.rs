//! Splits a corpus at its median sentence BLEU-1 and ranks the styles.
//!
//! cargo run --example triage_corpus -- [corpus.jsonl] [best_styles]

use std::path::PathBuf;

use caption_xray::corpus::load_corpus;
use caption_xray::triage::triage;

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/labeled20.jsonl"));
    let k = args.next().and_then(|a| a.parse().ok()).unwrap_or(5);
    let corpus = load_corpus(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let report = triage(&corpus, k).expect("valid corpus");

    println!("median BLEU-1 {:.4}", report.threshold);
    println!("{} low performers (strictly below the median):", report.low_performer_ids.len());
    for lp in &report.low_performer_ids {
        println!("  {:<6} {:<8} {:.3}", lp.image_id, lp.style, lp.bleu1);
    }
    println!("style ranking:");
    for e in &report.style_ranking.entries {
        println!("  {:<8} {:.4}", e.style, e.mean_bleu1);
    }
    println!("best styles (top {k} above the median): {}", report.best_styles.join(", "));
}

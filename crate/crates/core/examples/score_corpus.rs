//! Scores a JSONL corpus with BLEU-1..4, ROUGE-L and CIDEr.
//!
//! cargo run --example score_corpus -- [corpus.jsonl]

use std::path::PathBuf;

use caption_xray::corpus::load_corpus;
use caption_xray::metrics::score_corpus;

fn default_corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/labeled20.jsonl")
}

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(default_corpus);
    let corpus = load_corpus(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let report = score_corpus(&corpus).expect("non-empty corpus");
    let c = &report.corpus;
    println!("{} records, {} unique generated words", c.record_count, c.unique_words);
    println!("corpus BLEU-1..4   {:.4} {:.4} {:.4} {:.4}", c.bleu1, c.bleu2, c.bleu3, c.bleu4);
    println!(
        "mean sentence BLEU {:.4} {:.4} {:.4} {:.4}",
        c.sentence_bleu1, c.sentence_bleu2, c.sentence_bleu3, c.sentence_bleu4
    );
    println!("ROUGE-L {:.4}  CIDEr {:.4}", c.rouge_l, c.cider);
    println!();
    for (rec, s) in corpus.iter().zip(&report.records) {
        println!("{:<6} {:<8} BLEU-1 {:.3}  ROUGE-L {:.3}  CIDEr {:.3}  {}", rec.image_id, rec.style, s.bleu1, s.rouge_l, s.cider, rec.generation);
    }
}

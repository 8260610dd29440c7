//! Walks each low performer through both views of the decision tree and
//! prints the node trace and the suspected error sources.
//!
//! cargo run --example explain_record -- [corpus.jsonl] [image_id]

use std::path::PathBuf;

use caption_xray::corpus::{load_corpus, StopwordList};
use caption_xray::triage::triage;
use caption_xray::xray::explain_record;

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/labeled20.jsonl"));
    let only = args.next();
    let corpus = load_corpus(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let report = triage(&corpus, 5).expect("valid corpus");
    let stopwords = StopwordList::english();
    println!("best styles: {}", report.best_styles.join(", "));

    for &i in &report.low_performer_indices {
        let record = &corpus[i];
        if only.as_deref().is_some_and(|id| id != record.image_id) {
            continue;
        }
        println!("\n{} [{}] {:?}", record.image_id, record.style, record.generation);
        match explain_record(record, &report.best_styles, &stopwords) {
            Ok(e) => {
                println!("  current view -> {}", e.leaf_v1);
                for line in &e.trace_v1 {
                    println!("    {line}");
                }
                println!("  alternates view -> {}", e.leaf_v2);
                for alt in &e.alternates {
                    println!("    {} reached {}", alt.style, alt.leaf);
                }
                for line in &e.trace_v2 {
                    println!("    {line}");
                }
                println!("  suspects: {}, then {}", e.first, e.second);
                if let Some(label) = record.error_label {
                    println!("  labeled: {label}");
                }
            }
            Err(err) => println!("  not explained: {err}"),
        }
    }
}

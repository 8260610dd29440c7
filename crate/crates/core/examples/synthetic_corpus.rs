//! Trains the toy decoder on the synthetic world, then generates a corpus
//! with injected errors and prints a few records.
//!
//! cargo run --release --example synthetic_corpus -- [size] [train_examples] [epochs] [learning_rate]

use std::time::Instant;

use caption_xray::fusion::synth::SyntheticWorld;
use caption_xray::fusion::{
    evaluate_loss, generate_synthetic_corpus, train_world_model, BeamConfig, Corruption, SynthConfig, TrainConfig, WorldTraining,
};

fn main() {
    let mut args = std::env::args().skip(1);
    let size = args.next().and_then(|a| a.parse().ok()).unwrap_or(20);
    let train_examples = args.next().and_then(|a| a.parse().ok()).unwrap_or(120);
    let epochs = args.next().and_then(|a| a.parse().ok()).unwrap_or(30);
    let learning_rate = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.02);

    let world = SyntheticWorld::new(0);
    let settings = WorldTraining {
        examples: train_examples,
        train: TrainConfig { epochs, learning_rate, ..TrainConfig::default() },
    };
    let start = Instant::now();
    let (model, report) = train_world_model(&world, 0, &settings).expect("training converges");
    let held_out = world.training_examples(&model.vocab, 40, 99);
    println!(
        "trained {epochs} epochs on {train_examples} triples in {:.1?}: train loss {:.3}, held-out loss {:.3}",
        start.elapsed(),
        report.final_loss().unwrap(),
        evaluate_loss(&model, &held_out).unwrap()
    );

    let start = Instant::now();
    let config = SynthConfig { size, corruption: Corruption::Mixed, seed: 3, beam: BeamConfig::default() };
    let corpus = generate_synthetic_corpus(&world, &model, &config).expect("generation succeeds");
    println!("generated {size} records in {:.1?}", start.elapsed());
    for r in corpus.records.iter().take(6) {
        println!("\n{} [{}] label={:?}", r.image_id, r.style, r.error_label);
        println!("  generation:   {}", r.generation);
        println!("  ground truth: {}", r.ground_truths[0]);
        println!("  dense:        {}", r.dense_captions.join(" | "));
        for g in &r.other_generations {
            println!("  {:<12}  {}", g.style, g.text);
        }
    }
}

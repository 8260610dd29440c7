//! Trains the toy fusion decoder briefly, then decodes a few scenes in every
//! style with greedy search and beam search, and once more with the visual
//! branch switched off.
//!
//! cargo run --release --example fusion_decode -- [epochs]

use caption_xray::fusion::synth::{Scene, SyntheticWorld};
use caption_xray::fusion::{beam_search, encode_image, greedy_decode, train_world_model, BeamConfig, Branch, WorldTraining};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(30);
    let world = SyntheticWorld::new(0);
    let mut settings = WorldTraining::default();
    settings.train.epochs = epochs;
    let (model, report) = train_world_model(&world, 0, &settings).expect("training converges");
    println!("trained {epochs} epochs, final loss {:.3} nats/token", report.final_loss().unwrap());

    let beam = BeamConfig::default();
    let mut caption_only = model.clone();
    caption_only.zero_branch(Branch::Visual);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let scene = Scene::sample(&mut rng);
        let input = world.image_input(&model.vocab, &scene, &mut rng);
        let enc = encode_image(&model, &input).unwrap();
        println!("\nreference: {}", scene.caption(0));
        for (s, style) in model.styles.iter().enumerate() {
            let greedy = greedy_decode(&model, &enc, s, &beam).unwrap();
            let out = beam_search(&model, &enc, s, &beam).unwrap();
            println!("  {style:<12} greedy: {}", model.vocab.decode(&greedy));
            println!("  {:<12} beam:   {} ({:.3})", "", model.vocab.decode(&out.tokens), out.score);
        }
        let enc = encode_image(&caption_only, &input).unwrap();
        let out = beam_search(&caption_only, &enc, 0, &beam).unwrap();
        println!("  captions only: {}", caption_only.vocab.decode(&out.tokens));
    }
}

//! Compares analytic gradients with central finite differences on a few
//! random tiny models.
//!
//! cargo run --release --example gradient_check -- [models]

use caption_xray::fusion::{gradient_check, FusionConfig, FusionModel, ImageInput, TrainingExample, Vocab};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sample(config: &FusionConfig, rng: &mut ChaCha8Rng) -> TrainingExample {
    let vec = |n: usize, rng: &mut ChaCha8Rng| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    let mean_pool = vec(config.feature_dim, rng);
    let spatial = (0..config.regions).map(|_| vec(config.feature_dim, rng)).collect();
    let tokens = |len: usize, rng: &mut ChaCha8Rng| (0..len).map(|_| rng.gen_range(4..config.vocab_size)).collect::<Vec<usize>>();
    let captions = (0..config.dense_captions)
        .map(|_| {
            let len = rng.gen_range(1..=3);
            tokens(len, rng)
        })
        .collect();
    let target_len = rng.gen_range(1..=4);
    TrainingExample {
        input: ImageInput { mean_pool, spatial, captions },
        style: rng.gen_range(0..config.style_count),
        target: tokens(target_len, rng),
    }
}

fn main() {
    let models: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let mut worst: f64 = 0.0;
    for seed in 0..models {
        let config = FusionConfig { seed, ..FusionConfig::tiny() };
        let vocab = Vocab::new(["w4", "w5", "w6", "w7"]);
        let styles = (0..config.style_count).map(|s| format!("style{s}")).collect();
        let model = FusionModel::new(config.clone(), vocab, styles).expect("valid tiny config");
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let sample = random_sample(&config, &mut rng);
        let report = gradient_check(&model, &sample).expect("finite gradients");
        println!(
            "model {seed}: {} parameters, max relative error {:.3e} at {:?}",
            report.checked, report.max_relative_error, report.worst
        );
        worst = worst.max(report.max_relative_error);
    }
    println!("worst over {models} models: {worst:.3e}");
}

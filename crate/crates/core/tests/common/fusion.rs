//! Random tiny models and samples for numeric checks.

use caption_xray::fusion::{FusionConfig, FusionModel, ImageInput, TrainingExample, Vocab};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TINY_WORDS: [&str; 4] = ["the", "cat", "dog", "sat"];

pub fn tiny_model(seed: u64) -> FusionModel {
    let config = FusionConfig {
        seed,
        ..FusionConfig::tiny()
    };
    let styles = (0..config.style_count).map(|s| format!("style{s}")).collect();
    FusionModel::new(config, Vocab::new(TINY_WORDS), styles).expect("tiny config is valid")
}

fn vector(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Caption lengths are drawn from 1..=3 unless given.
pub fn random_input(config: &FusionConfig, rng: &mut ChaCha8Rng, lengths: Option<&[usize]>) -> ImageInput {
    let captions = (0..config.dense_captions)
        .map(|i| {
            let len = lengths.map_or_else(|| rng.gen_range(1..=3), |l| l[i]);
            (0..len).map(|_| rng.gen_range(4..config.vocab_size)).collect()
        })
        .collect();
    ImageInput {
        mean_pool: vector(config.feature_dim, 1.0, rng),
        spatial: (0..config.regions).map(|_| vector(config.feature_dim, 1.0, rng)).collect(),
        captions,
    }
}

pub fn random_sample(config: &FusionConfig, rng: &mut ChaCha8Rng) -> TrainingExample {
    let input = random_input(config, rng, None);
    let len = rng.gen_range(1..=4);
    TrainingExample {
        input,
        style: rng.gen_range(0..config.style_count),
        target: (0..len).map(|_| rng.gen_range(4..config.vocab_size)).collect(),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    vector(n, scale, rng)
}

//! Overfits the toy decoder on 20 synthetic triples and prints the loss trace.
//!
//! cargo run --release --example train_overfit -- [epochs] [learning_rate] [dropout]

use std::time::Instant;

use caption_xray::fusion::synth::SyntheticWorld;
use caption_xray::fusion::{train, TrainConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);
    let learning_rate = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.05);
    let dropout: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.1);

    let world = SyntheticWorld::new(0);
    let mut model = world.new_model(0).expect("toy config is valid");
    model.config.dropout = dropout;
    let examples = world.training_examples(&model.vocab, 20, 1);
    let config = TrainConfig {
        epochs,
        learning_rate,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let report = train(&mut model, &examples, &config).expect("training converges");
    for (epoch, loss) in report.epoch_losses.iter().enumerate() {
        if epoch < 10 || epoch % 20 == 19 {
            println!("epoch {:>3}: {loss:.4} nats/token", epoch + 1);
        }
    }
    println!("final {:.4} nats/token in {:.1?}", report.final_loss().unwrap(), start.elapsed());
}

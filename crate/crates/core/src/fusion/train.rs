use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::forward::{sequence_log_likelihood, Dropout, ImageInput};
use super::graph::Graph;
use super::model::FusionModel;
use super::params::ParamStore;

/// One (features + dense captions, style, target caption) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub input: ImageInput,
    pub style: usize,
    /// Target token ids without begin/end markers.
    pub target: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// The learning rate is multiplied by `decay_factor` every `decay_every`
    /// epochs.
    pub decay_every: usize,
    pub decay_factor: f64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            learning_rate: 5e-3,
            batch_size: 4,
            decay_every: 5,
            decay_factor: 0.8,
            clip_norm: Some(5.0),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let decays = epoch.checked_div(self.decay_every).unwrap_or(0);
        self.learning_rate * self.decay_factor.powi(decays as i32)
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: ParamStore,
    v: ParamStore,
    t: i32,
}

impl Adam {
    pub fn new(params: &ParamStore) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut ParamStore, grads: &ParamStore, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = self.beta1 * m.data[i] + (1.0 - self.beta1) * gi;
                v.data[i] = self.beta2 * v.data[i] + (1.0 - self.beta2) * gi * gi;
                let mh = m.data[i] / c1;
                let vh = v.data[i] / c2;
                p.data[i] -= lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean cross-entropy per predicted token, one entry per epoch.
    pub epoch_losses: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

fn check_example(model: &FusionModel, i: usize, ex: &TrainingExample) -> Result<()> {
    let c = &model.config;
    super::forward::check_visual(model, &ex.input.mean_pool, &ex.input.spatial)
        .and_then(|_| super::forward::check_captions(model, &ex.input.captions))
        .map_err(|e| Error::Training(format!("example {i}: {e}")))?;
    if ex.style >= c.style_count {
        return Err(Error::Training(format!("example {i}: style {} out of range", ex.style)));
    }
    if let Some(&t) = ex.target.iter().find(|&&t| t >= c.vocab_size) {
        return Err(Error::Training(format!("example {i}: target token {t} out of range")));
    }
    Ok(())
}

/// Negative log-likelihood of `target` and its gradient, accumulated into
/// `grads`. Returns (summed NLL, predicted token count).
pub(crate) fn example_loss(
    model: &FusionModel,
    ex: &TrainingExample,
    dropout: Option<&mut Dropout>,
    grads: Option<&mut ParamStore>,
) -> (f64, usize) {
    let mut g = Graph::new(&model.params);
    let (ll, n) = sequence_log_likelihood(&mut g, model, &ex.input, ex.style, &ex.target, dropout);
    if let Some(grads) = grads {
        g.backward(ll, -1.0, grads);
    }
    (-g.scalar(ll), n)
}

/// Mean per-token loss without dropout or parameter updates.
pub fn evaluate_loss(model: &FusionModel, examples: &[TrainingExample]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Training("empty dataset".into()));
    }
    let (mut total, mut tokens) = (0.0, 0);
    for (i, ex) in examples.iter().enumerate() {
        check_example(model, i, ex)?;
        let (l, n) = example_loss(model, ex, None, None);
        total += l;
        tokens += n;
    }
    Ok(total / tokens as f64)
}

/// Teacher-forced cross-entropy training with Adam. Each batch's gradient is
/// the summed token loss divided by the batch's token count.
pub fn train(model: &mut FusionModel, examples: &[TrainingExample], config: &TrainConfig) -> Result<TrainReport> {
    if examples.is_empty() {
        return Err(Error::Training("empty dataset".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::Training("batch size must be at least 1".into()));
    }
    for (i, ex) in examples.iter().enumerate() {
        check_example(model, i, ex)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dropout = Dropout::new(model.config.dropout, config.seed.wrapping_add(1));
    let mut adam = Adam::new(&model.params);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let lr = config.learning_rate_at(epoch);
        order.shuffle(&mut rng);
        let (mut epoch_total, mut epoch_tokens) = (0.0, 0usize);
        for batch in order.chunks(config.batch_size) {
            let mut grads = model.params.zeros_like();
            let (mut total, mut tokens) = (0.0, 0usize);
            for &i in batch {
                let (l, n) = example_loss(model, &examples[i], Some(&mut dropout), Some(&mut grads));
                if !l.is_finite() {
                    return Err(Error::Training(format!(
                        "non-finite loss at epoch {epoch} on example {i}"
                    )));
                }
                total += l;
                tokens += n;
            }
            let scale = 1.0 / tokens as f64;
            let mut norm_sq = 0.0;
            for t in grads.iter_mut() {
                for v in t.data.iter_mut() {
                    *v *= scale;
                    norm_sq += *v * *v;
                }
            }
            if let Some(clip) = config.clip_norm {
                let norm = norm_sq.sqrt();
                if norm > clip {
                    let k = clip / norm;
                    grads.iter_mut().for_each(|t| t.data.iter_mut().for_each(|v| *v *= k));
                }
            }
            adam.step(&mut model.params, &grads, lr);
            if !model.params.all_finite() {
                return Err(Error::Training(format!("parameters diverged at epoch {epoch}")));
            }
            epoch_total += total;
            epoch_tokens += tokens;
        }
        epoch_losses.push(epoch_total / epoch_tokens as f64);
    }
    Ok(TrainReport { epoch_losses })
}

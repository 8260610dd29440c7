use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::forward::{decode_step, stylize_word, DecoderState, EncodedImage};
use super::model::{FusionModel, BOS, EOS, PAD, UNK};

pub const DEFAULT_BEAM_SIZE: usize = 5;
pub const DEFAULT_REPETITION_PENALTY: f64 = 2.0;
pub const DEFAULT_NO_END_AFTER: [&str; 6] = ["an", "a", "the", "at", "of", "with"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub beam_size: usize,
    /// Generated-token limit, end token included; `None` uses the model's
    /// `max_caption_len`.
    pub max_len: Option<usize>,
    /// Subtracted from a token's log-probability once per earlier occurrence
    /// in the hypothesis.
    pub repetition_penalty: f64,
    /// The end token may not directly follow any of these words.
    pub no_end_after: Vec<String>,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            beam_size: DEFAULT_BEAM_SIZE,
            max_len: None,
            repetition_penalty: DEFAULT_REPETITION_PENALTY,
            no_end_after: DEFAULT_NO_END_AFTER.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamOutput {
    /// Generated tokens, end token excluded.
    pub tokens: Vec<usize>,
    /// Penalized log-probability summed over generated tokens (end token
    /// included) divided by their count.
    pub score: f64,
}

struct Rules {
    no_end_ids: BTreeSet<usize>,
    penalty: f64,
    max_len: usize,
}

impl Rules {
    fn new(model: &FusionModel, config: &BeamConfig) -> Self {
        Rules {
            no_end_ids: config
                .no_end_after
                .iter()
                .map(|w| model.vocab.id(w))
                .filter(|&id| id > UNK)
                .collect(),
            penalty: config.repetition_penalty,
            max_len: config.max_len.unwrap_or(model.config.max_caption_len),
        }
    }

    /// Penalized log-probabilities; `None` marks banned tokens.
    fn adjust(&self, log_probs: &[f64], history: &[usize]) -> Vec<Option<f64>> {
        let end_banned = history.last().is_none_or(|t| self.no_end_ids.contains(t));
        log_probs
            .iter()
            .enumerate()
            .map(|(tok, &lp)| {
                if tok == PAD || tok == BOS || tok == UNK || (tok == EOS && end_banned) {
                    return None;
                }
                let seen = history.iter().filter(|&&t| t == tok).count();
                Some(lp - self.penalty * seen as f64)
            })
            .collect()
    }
}

fn check(model: &FusionModel, style: usize, config: &BeamConfig) -> Result<()> {
    if config.beam_size == 0 {
        return Err(Error::Argument("beam size must be at least 1".into()));
    }
    if style >= model.config.style_count {
        return Err(Error::Argument(format!("style index {style} out of range")));
    }
    Ok(())
}

fn step(model: &FusionModel, state: &DecoderState, prev: usize, style: usize, encoded: &EncodedImage) -> Result<(Vec<f64>, DecoderState)> {
    let w = stylize_word(model, prev, style)?;
    Ok(decode_step(model, state, &w, encoded))
}

/// Length-normalized beam search with a repetition penalty, banned special
/// tokens, and no ending right after configured function words.
pub fn beam_search(model: &FusionModel, encoded: &EncodedImage, style: usize, config: &BeamConfig) -> Result<BeamOutput> {
    check(model, style, config)?;
    let rules = Rules::new(model, config);

    struct Hyp {
        tokens: Vec<usize>,
        sum: f64,
        state: DecoderState,
    }

    let mut beam = vec![Hyp {
        tokens: Vec::new(),
        sum: 0.0,
        state: DecoderState::initial(model),
    }];
    let mut finished: Vec<BeamOutput> = Vec::new();

    for len in 0..rules.max_len {
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        let mut next_states = Vec::with_capacity(beam.len());
        for (h, hyp) in beam.iter().enumerate() {
            let prev = hyp.tokens.last().copied().unwrap_or(BOS);
            let (lp, next) = step(model, &hyp.state, prev, style, encoded)?;
            for (tok, adj) in rules.adjust(&lp, &hyp.tokens).into_iter().enumerate() {
                if let Some(a) = adj {
                    candidates.push((hyp.sum + a, h, tok));
                }
            }
            next_states.push(next);
        }
        candidates.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        let mut next_beam = Vec::new();
        for (sum, h, tok) in candidates.into_iter().take(config.beam_size) {
            let n = len + 1;
            if tok == EOS {
                finished.push(BeamOutput {
                    tokens: beam[h].tokens.clone(),
                    score: sum / n as f64,
                });
            } else {
                let mut tokens = beam[h].tokens.clone();
                tokens.push(tok);
                next_beam.push(Hyp {
                    tokens,
                    sum,
                    state: next_states[h].clone(),
                });
            }
        }
        beam = next_beam;
        if beam.is_empty() {
            break;
        }
    }
    for hyp in beam {
        let n = hyp.tokens.len().max(1);
        finished.push(BeamOutput {
            score: hyp.sum / n as f64,
            tokens: hyp.tokens,
        });
    }
    let mut best: Option<BeamOutput> = None;
    for f in finished {
        if best.as_ref().is_none_or(|b| f.score > b.score) {
            best = Some(f);
        }
    }
    Ok(best.unwrap_or(BeamOutput {
        tokens: Vec::new(),
        score: 0.0,
    }))
}

/// Picks the best allowed token at every step under the same penalties as
/// [`beam_search`].
pub fn greedy_decode(model: &FusionModel, encoded: &EncodedImage, style: usize, config: &BeamConfig) -> Result<Vec<usize>> {
    check(model, style, config)?;
    let rules = Rules::new(model, config);
    let mut state = DecoderState::initial(model);
    let mut tokens = Vec::new();
    for _ in 0..rules.max_len {
        let prev = tokens.last().copied().unwrap_or(BOS);
        let (lp, next) = step(model, &state, prev, style, encoded)?;
        let mut best: Option<(usize, f64)> = None;
        for (tok, adj) in rules.adjust(&lp, &tokens).into_iter().enumerate() {
            if let Some(a) = adj {
                if best.is_none_or(|(_, b)| a > b) {
                    best = Some((tok, a));
                }
            }
        }
        match best {
            None | Some((EOS, _)) => break,
            Some((tok, _)) => tokens.push(tok),
        }
        state = next;
    }
    Ok(tokens)
}

//! Forward pass of the two-branch decoder.
//!
//! Each step runs a caption branch (attention over dense-caption word states)
//! and a visual branch (attention over spatial features). Both branches read
//! the fused previous hidden states, and their outputs are summed:
//! `h_lang = h_lang_cap + h_lang_vis`, `h_att = h_att_cap + h_att_vis`, and
//! the vocabulary projection reads `dropout(h_lang_cap) + dropout(h_lang_vis)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::graph::{Graph, NodeId};
use super::model::{Activation, AttentionParams, Branch, BranchParams, FusionModel, LstmParams};

/// Inverted dropout with its own deterministic stream.
#[derive(Debug, Clone)]
pub struct Dropout {
    rate: f64,
    rng: ChaCha8Rng,
}

impl Dropout {
    pub fn new(rate: f64, seed: u64) -> Self {
        Dropout {
            rate,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn apply(&mut self, g: &mut Graph<'_>, x: NodeId) -> NodeId {
        if self.rate <= 0.0 {
            return x;
        }
        let keep = 1.0 - self.rate;
        let mask = (0..g.value(x).len())
            .map(|_| {
                if self.rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect();
        g.mask_mul(x, mask)
    }
}

fn maybe_dropout(g: &mut Graph<'_>, x: NodeId, dropout: &mut Option<&mut Dropout>) -> NodeId {
    match dropout {
        Some(d) => d.apply(g, x),
        None => x,
    }
}

/// One LSTM cell step with gates packed as (input, forget, cell, output).
pub(crate) fn lstm_step(
    g: &mut Graph<'_>,
    p: &LstmParams,
    x: NodeId,
    h: NodeId,
    c: NodeId,
) -> (NodeId, NodeId) {
    let m = p.hidden;
    let xh = g.concat(&[x, h]);
    let z = g.linear(p.w, Some(p.b), xh);
    let zi = g.slice(z, 0, m);
    let zf = g.slice(z, m, m);
    let zg = g.slice(z, 2 * m, m);
    let zo = g.slice(z, 3 * m, m);
    let i = g.sigmoid(zi);
    let f = g.sigmoid(zf);
    let cand = g.tanh(zg);
    let o = g.sigmoid(zo);
    let fc = g.mul(f, c);
    let ic = g.mul(i, cand);
    let c_new = g.add(fc, ic);
    let tc = g.tanh(c_new);
    let h_new = g.mul(o, tc);
    (h_new, c_new)
}

/// `W_va v_i` for every attended state; independent of the decode step.
pub(crate) fn project_states(g: &mut Graph<'_>, p: &AttentionParams, states: &[NodeId]) -> Vec<NodeId> {
    states.iter().map(|&s| g.linear(p.wv, None, s)).collect()
}

/// Additive attention: `a_i = w_a . tanh(W_va v_i + W_ha h)`,
/// `alpha = softmax(a)`, result `sum_i alpha_i v_i`.
pub(crate) fn attend_graph(
    g: &mut Graph<'_>,
    p: &AttentionParams,
    h: NodeId,
    states: &[NodeId],
    projected: &[NodeId],
) -> (NodeId, NodeId) {
    let wh = g.linear(p.wh, None, h);
    let scores: Vec<NodeId> = projected
        .iter()
        .map(|&pv| {
            let s = g.add(pv, wh);
            let t = g.tanh(s);
            g.linear(p.wa, None, t)
        })
        .collect();
    let a = g.concat(&scores);
    let alpha = g.softmax(a);
    let attended = g.weighted_sum(alpha, states);
    (attended, alpha)
}

/// Graph handles of an encoded image.
#[derive(Debug, Clone)]
pub(crate) struct GraphEncoded {
    pub mean_pool: NodeId,
    pub spatial: Vec<NodeId>,
    pub v_cap: NodeId,
    pub words: Vec<NodeId>,
}

/// Per-sequence attention projections for both branches.
pub(crate) struct Projections {
    words: Vec<NodeId>,
    spatial: Vec<NodeId>,
}

pub(crate) fn projections(g: &mut Graph<'_>, model: &FusionModel, enc: &GraphEncoded) -> Projections {
    Projections {
        words: project_states(g, &model.layout.caption.attention, &enc.words),
        spatial: project_states(g, &model.layout.visual.attention, &enc.spatial),
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GraphState {
    pub h_att: NodeId,
    pub h_lang: NodeId,
    pub c_att_cap: NodeId,
    pub c_lang_cap: NodeId,
    pub c_att_vis: NodeId,
    pub c_lang_vis: NodeId,
}

impl GraphState {
    pub fn zeros(g: &mut Graph<'_>, m: usize) -> Self {
        let z = g.zeros(m);
        GraphState {
            h_att: z,
            h_lang: z,
            c_att_cap: z,
            c_lang_cap: z,
            c_att_vis: z,
            c_lang_vis: z,
        }
    }
}

pub(crate) struct GraphStep {
    pub log_probs: NodeId,
    pub state: GraphState,
    pub h_att_cap: NodeId,
    pub h_lang_cap: NodeId,
    pub h_att_vis: NodeId,
    pub h_lang_vis: NodeId,
    pub alpha_cap: NodeId,
    pub alpha_vis: NodeId,
}

pub(crate) fn check_captions(model: &FusionModel, captions: &[Vec<usize>]) -> Result<()> {
    let c = &model.config;
    if captions.len() != c.dense_captions {
        return Err(Error::Argument(format!(
            "expected {} dense captions, got {}",
            c.dense_captions,
            captions.len()
        )));
    }
    for (i, cap) in captions.iter().enumerate() {
        if cap.is_empty() {
            return Err(Error::Argument(format!("dense caption {i} is empty")));
        }
        if cap.len() > c.max_caption_len {
            return Err(Error::Argument(format!(
                "dense caption {i} has {} tokens, limit {}",
                cap.len(),
                c.max_caption_len
            )));
        }
        if let Some(&bad) = cap.iter().find(|&&t| t >= c.vocab_size) {
            return Err(Error::Argument(format!("token id {bad} outside vocabulary")));
        }
    }
    Ok(())
}

/// Runs the dense-caption LSTM over each caption from a zero state. Returns
/// the concatenated final hidden states and every per-word cell state.
pub(crate) fn encode_captions_graph(
    g: &mut Graph<'_>,
    model: &FusionModel,
    captions: &[Vec<usize>],
) -> (NodeId, Vec<NodeId>) {
    let l = &model.layout;
    let m = model.config.hidden_dim;
    let mut finals = Vec::with_capacity(captions.len());
    let mut words = Vec::new();
    for cap in captions {
        let mut h = g.zeros(m);
        let mut c = h;
        for &tok in cap {
            let x = g.row(l.word_embed, tok);
            let (h2, c2) = lstm_step(g, &l.encoder, x, h, c);
            h = h2;
            c = c2;
            words.push(c2);
        }
        finals.push(h);
    }
    let v_cap = g.concat(&finals);
    (v_cap, words)
}

fn encode_feature(
    g: &mut Graph<'_>,
    model: &FusionModel,
    w: usize,
    b: usize,
    raw: &[f64],
    dropout: &mut Option<&mut Dropout>,
) -> NodeId {
    let x = g.leaf(raw.to_vec());
    let lin = g.linear(w, Some(b), x);
    let d = maybe_dropout(g, lin, dropout);
    match model.config.activation {
        Activation::Relu => g.relu(d),
        Activation::Tanh => g.tanh(d),
    }
}

pub(crate) fn check_visual(model: &FusionModel, mean_pool: &[f64], spatial: &[Vec<f64>]) -> Result<()> {
    let c = &model.config;
    if mean_pool.len() != c.feature_dim {
        return Err(Error::Argument(format!(
            "mean-pool feature has {} values, expected {}",
            mean_pool.len(),
            c.feature_dim
        )));
    }
    if spatial.len() != c.regions {
        return Err(Error::Argument(format!(
            "{} spatial features, expected {}",
            spatial.len(),
            c.regions
        )));
    }
    if let Some(bad) = spatial.iter().find(|s| s.len() != c.feature_dim) {
        return Err(Error::Argument(format!(
            "spatial feature has {} values, expected {}",
            bad.len(),
            c.feature_dim
        )));
    }
    Ok(())
}

pub(crate) fn encode_visual_graph(
    g: &mut Graph<'_>,
    model: &FusionModel,
    mean_pool: &[f64],
    spatial: &[Vec<f64>],
    dropout: &mut Option<&mut Dropout>,
) -> (NodeId, Vec<NodeId>) {
    let l = &model.layout;
    let mp = encode_feature(g, model, l.visual_mean_w, l.visual_mean_b, mean_pool, dropout);
    let sp = spatial
        .iter()
        .map(|s| encode_feature(g, model, l.visual_spatial_w, l.visual_spatial_b, s, dropout))
        .collect();
    (mp, sp)
}

/// Style vector `p`: embedding row through a linear layer.
pub(crate) fn style_vector(g: &mut Graph<'_>, model: &FusionModel, style: usize) -> NodeId {
    let l = &model.layout;
    let e = g.row(l.style_embed, style);
    g.linear(l.style_proj_w, Some(l.style_proj_b), e)
}

pub(crate) fn stylized_word(g: &mut Graph<'_>, model: &FusionModel, token: usize, style_vec: NodeId) -> NodeId {
    let e = g.row(model.layout.word_embed, token);
    g.concat(&[e, style_vec])
}

#[allow(clippy::too_many_arguments)]
fn branch_step(
    g: &mut Graph<'_>,
    b: &BranchParams,
    state: &GraphState,
    context: NodeId,
    w_t: NodeId,
    c_att: NodeId,
    c_lang: NodeId,
    states: &[NodeId],
    projected: &[NodeId],
) -> (NodeId, NodeId, NodeId, NodeId, NodeId) {
    let x_att = g.concat(&[state.h_lang, context, w_t]);
    let (h_att, c_att2) = lstm_step(g, &b.att_lstm, x_att, state.h_att, c_att);
    let (attended, alpha) = attend_graph(g, &b.attention, h_att, states, projected);
    let x_lang = g.concat(&[attended, h_att]);
    let (h_lang, c_lang2) = lstm_step(g, &b.lang_lstm, x_lang, state.h_lang, c_lang);
    (h_att, c_att2, h_lang, c_lang2, alpha)
}

pub(crate) fn decode_step_graph(
    g: &mut Graph<'_>,
    model: &FusionModel,
    state: &GraphState,
    w_t: NodeId,
    enc: &GraphEncoded,
    proj: &Projections,
    dropout: &mut Option<&mut Dropout>,
) -> GraphStep {
    let l = &model.layout;
    let (h_att_cap, c_att_cap, h_lang_cap, c_lang_cap, alpha_cap) = branch_step(
        g,
        &l.caption,
        state,
        enc.v_cap,
        w_t,
        state.c_att_cap,
        state.c_lang_cap,
        &enc.words,
        &proj.words,
    );
    let (h_att_vis, c_att_vis, h_lang_vis, c_lang_vis, alpha_vis) = branch_step(
        g,
        &l.visual,
        state,
        enc.mean_pool,
        w_t,
        state.c_att_vis,
        state.c_lang_vis,
        &enc.spatial,
        &proj.spatial,
    );
    let h_lang = g.add(h_lang_cap, h_lang_vis);
    let h_att = g.add(h_att_cap, h_att_vis);
    let d_cap = maybe_dropout(g, h_lang_cap, dropout);
    let d_vis = maybe_dropout(g, h_lang_vis, dropout);
    let out = g.add(d_cap, d_vis);
    let logits = g.linear(l.out_w, Some(l.out_b), out);
    let log_probs = g.log_softmax(logits);
    GraphStep {
        log_probs,
        state: GraphState {
            h_att,
            h_lang,
            c_att_cap,
            c_lang_cap,
            c_att_vis,
            c_lang_vis,
        },
        h_att_cap,
        h_lang_cap,
        h_att_vis,
        h_lang_vis,
        alpha_cap,
        alpha_vis,
    }
}

/// Raw inputs for one image: visual features and tokenized dense captions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageInput {
    pub mean_pool: Vec<f64>,
    pub spatial: Vec<Vec<f64>>,
    pub captions: Vec<Vec<usize>>,
}

/// Encoded features of one image, detached from any graph.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedImage {
    pub mean_pool: Vec<f64>,
    pub spatial: Vec<Vec<f64>>,
    /// Concatenation of the five final caption hidden states.
    pub v_cap: Vec<f64>,
    /// One state per dense-caption word, in caption order.
    pub word_states: Vec<Vec<f64>>,
}

impl EncodedImage {
    pub(crate) fn to_graph(&self, g: &mut Graph<'_>) -> GraphEncoded {
        GraphEncoded {
            mean_pool: g.leaf(self.mean_pool.clone()),
            spatial: self.spatial.iter().map(|s| g.leaf(s.clone())).collect(),
            v_cap: g.leaf(self.v_cap.clone()),
            words: self.word_states.iter().map(|s| g.leaf(s.clone())).collect(),
        }
    }
}

/// Decoder recurrent state between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    pub h_att: Vec<f64>,
    pub h_lang: Vec<f64>,
    pub c_att_cap: Vec<f64>,
    pub c_lang_cap: Vec<f64>,
    pub c_att_vis: Vec<f64>,
    pub c_lang_vis: Vec<f64>,
    pub step: usize,
}

impl DecoderState {
    pub fn initial(model: &FusionModel) -> Self {
        let z = vec![0.0; model.config.hidden_dim];
        DecoderState {
            h_att: z.clone(),
            h_lang: z.clone(),
            c_att_cap: z.clone(),
            c_lang_cap: z.clone(),
            c_att_vis: z.clone(),
            c_lang_vis: z,
            step: 0,
        }
    }

    fn to_graph(&self, g: &mut Graph<'_>) -> GraphState {
        GraphState {
            h_att: g.leaf(self.h_att.clone()),
            h_lang: g.leaf(self.h_lang.clone()),
            c_att_cap: g.leaf(self.c_att_cap.clone()),
            c_lang_cap: g.leaf(self.c_lang_cap.clone()),
            c_att_vis: g.leaf(self.c_att_vis.clone()),
            c_lang_vis: g.leaf(self.c_lang_vis.clone()),
        }
    }

    fn from_graph(g: &Graph<'_>, s: &GraphState, step: usize) -> Self {
        DecoderState {
            h_att: g.value(s.h_att).to_vec(),
            h_lang: g.value(s.h_lang).to_vec(),
            c_att_cap: g.value(s.c_att_cap).to_vec(),
            c_lang_cap: g.value(s.c_lang_cap).to_vec(),
            c_att_vis: g.value(s.c_att_vis).to_vec(),
            c_lang_vis: g.value(s.c_lang_vis).to_vec(),
            step,
        }
    }
}

/// Per-branch hidden states of one step, for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchStates {
    pub h_att_cap: Vec<f64>,
    pub h_lang_cap: Vec<f64>,
    pub h_att_vis: Vec<f64>,
    pub h_lang_vis: Vec<f64>,
    pub alpha_cap: Vec<f64>,
    pub alpha_vis: Vec<f64>,
}

/// Encodes five tokenized dense captions: (caption vector, word states).
pub fn encode_dense_captions(model: &FusionModel, captions: &[Vec<usize>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    check_captions(model, captions)?;
    let mut g = Graph::new(&model.params);
    let (v_cap, words) = encode_captions_graph(&mut g, model, captions);
    Ok((
        g.value(v_cap).to_vec(),
        words.iter().map(|&w| g.value(w).to_vec()).collect(),
    ))
}

/// Linear, dropout (inactive here), activation for the mean-pooled and each
/// spatial feature.
pub fn encode_visual(model: &FusionModel, mean_pool: &[f64], spatial: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    check_visual(model, mean_pool, spatial)?;
    let mut g = Graph::new(&model.params);
    let (mp, sp) = encode_visual_graph(&mut g, model, mean_pool, spatial, &mut None);
    Ok((
        g.value(mp).to_vec(),
        sp.iter().map(|&s| g.value(s).to_vec()).collect(),
    ))
}

pub fn encode_image(model: &FusionModel, input: &ImageInput) -> Result<EncodedImage> {
    let (mean_pool, spatial) = encode_visual(model, &input.mean_pool, &input.spatial)?;
    let (v_cap, word_states) = encode_dense_captions(model, &input.captions)?;
    Ok(EncodedImage {
        mean_pool,
        spatial,
        v_cap,
        word_states,
    })
}

/// `w_t = [embed(token), p(style)]`.
pub fn stylize_word(model: &FusionModel, token: usize, style: usize) -> Result<Vec<f64>> {
    if style >= model.config.style_count {
        return Err(Error::Argument(format!("style index {style} out of range")));
    }
    if token >= model.config.vocab_size {
        return Err(Error::Argument(format!("token id {token} outside vocabulary")));
    }
    let mut g = Graph::new(&model.params);
    let p = style_vector(&mut g, model, style);
    let w = stylized_word(&mut g, model, token, p);
    Ok(g.value(w).to_vec())
}

/// Attention of one branch over `states` given attention hidden state `h_att`.
/// Returns (attended vector, weights).
pub fn attend(model: &FusionModel, branch: Branch, h_att: &[f64], states: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    if states.is_empty() {
        return Err(Error::Argument("attention over an empty state list".into()));
    }
    let p = model.layout.branch(branch).attention;
    let mut g = Graph::new(&model.params);
    let h = g.leaf(h_att.to_vec());
    let nodes: Vec<NodeId> = states.iter().map(|s| g.leaf(s.clone())).collect();
    let proj = project_states(&mut g, &p, &nodes);
    let (att, alpha) = attend_graph(&mut g, &p, h, &nodes, &proj);
    Ok((g.value(att).to_vec(), g.value(alpha).to_vec()))
}

/// One inference step: log-probabilities over the vocabulary and the next state.
pub fn decode_step(
    model: &FusionModel,
    state: &DecoderState,
    w_t: &[f64],
    encoded: &EncodedImage,
) -> (Vec<f64>, DecoderState) {
    let (lp, next, _) = decode_step_detailed(model, state, w_t, encoded);
    (lp, next)
}

pub fn decode_step_detailed(
    model: &FusionModel,
    state: &DecoderState,
    w_t: &[f64],
    encoded: &EncodedImage,
) -> (Vec<f64>, DecoderState, BranchStates) {
    let mut g = Graph::new(&model.params);
    let enc = encoded.to_graph(&mut g);
    let proj = projections(&mut g, model, &enc);
    let gs = state.to_graph(&mut g);
    let w = g.leaf(w_t.to_vec());
    let step = decode_step_graph(&mut g, model, &gs, w, &enc, &proj, &mut None);
    let branches = BranchStates {
        h_att_cap: g.value(step.h_att_cap).to_vec(),
        h_lang_cap: g.value(step.h_lang_cap).to_vec(),
        h_att_vis: g.value(step.h_att_vis).to_vec(),
        h_lang_vis: g.value(step.h_lang_vis).to_vec(),
        alpha_cap: g.value(step.alpha_cap).to_vec(),
        alpha_vis: g.value(step.alpha_vis).to_vec(),
    };
    (
        g.value(step.log_probs).to_vec(),
        DecoderState::from_graph(&g, &step.state, state.step + 1),
        branches,
    )
}

/// Builds the teacher-forced graph for one caption and returns the summed
/// target log-probability node and the number of predicted tokens
/// (caption length plus the end token).
pub(crate) fn sequence_log_likelihood(
    g: &mut Graph<'_>,
    model: &FusionModel,
    input: &ImageInput,
    style: usize,
    target: &[usize],
    mut dropout: Option<&mut Dropout>,
) -> (NodeId, usize) {
    use super::model::{BOS, EOS};
    let (mp, sp) = encode_visual_graph(g, model, &input.mean_pool, &input.spatial, &mut dropout);
    let (v_cap, words) = encode_captions_graph(g, model, &input.captions);
    let enc = GraphEncoded {
        mean_pool: mp,
        spatial: sp,
        v_cap,
        words,
    };
    let proj = projections(g, model, &enc);
    let p = style_vector(g, model, style);
    let mut state = GraphState::zeros(g, model.config.hidden_dim);
    let mut picks = Vec::with_capacity(target.len() + 1);
    let inputs = std::iter::once(BOS).chain(target.iter().copied());
    let outputs = target.iter().copied().chain(std::iter::once(EOS));
    for (tok_in, tok_out) in inputs.zip(outputs) {
        let w = stylized_word(g, model, tok_in, p);
        let step = decode_step_graph(g, model, &state, w, &enc, &proj, &mut dropout);
        picks.push(g.pick(step.log_probs, tok_out));
        state = step.state;
    }
    let n = picks.len();
    (g.sum(&picks), n)
}

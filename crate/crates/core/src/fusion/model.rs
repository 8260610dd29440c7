use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenSequence;
use crate::error::{Error, Result};

use super::params::{ParamStore, Tensor};

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
pub const SPECIAL_TOKENS: [&str; 4] = ["<pad>", "<bos>", "<eos>", "<unk>"];

/// Hidden activation after the visual linear+dropout layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub vocab_size: usize,
    pub word_dim: usize,
    pub style_count: usize,
    pub style_dim: usize,
    pub hidden_dim: usize,
    pub attention_dim: usize,
    /// Spatial feature vectors per image.
    pub regions: usize,
    /// Width of each raw visual feature vector.
    pub feature_dim: usize,
    pub dense_captions: usize,
    pub max_caption_len: usize,
    pub dropout: f64,
    pub activation: Activation,
    /// Half-width of the uniform initializer.
    pub init_scale: f64,
    pub seed: u64,
}

impl FusionConfig {
    /// Desk-scale defaults. `vocab_size` and `style_count` are normally
    /// overwritten from the vocabulary and style list.
    pub fn toy() -> Self {
        FusionConfig {
            vocab_size: 50,
            word_dim: 16,
            style_count: 6,
            style_dim: 8,
            hidden_dim: 32,
            attention_dim: 16,
            regions: 4,
            feature_dim: 16,
            dense_captions: 5,
            max_caption_len: 16,
            dropout: 0.1,
            activation: Activation::Relu,
            init_scale: 0.1,
            seed: 0,
        }
    }

    /// All dims at most 8; used by gradient checks.
    pub fn tiny() -> Self {
        FusionConfig {
            vocab_size: 8,
            word_dim: 4,
            style_count: 3,
            style_dim: 3,
            hidden_dim: 4,
            attention_dim: 3,
            regions: 2,
            feature_dim: 4,
            dense_captions: 5,
            max_caption_len: 6,
            dropout: 0.0,
            activation: Activation::Relu,
            init_scale: 0.5,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("vocab_size", self.vocab_size),
            ("word_dim", self.word_dim),
            ("style_count", self.style_count),
            ("style_dim", self.style_dim),
            ("hidden_dim", self.hidden_dim),
            ("attention_dim", self.attention_dim),
            ("regions", self.regions),
            ("feature_dim", self.feature_dim),
            ("max_caption_len", self.max_caption_len),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::Argument(format!("{name} must be at least 1")));
            }
        }
        if self.dense_captions != crate::corpus::DENSE_CAPTION_COUNT {
            return Err(Error::Argument(format!(
                "dense_captions must be {}",
                crate::corpus::DENSE_CAPTION_COUNT
            )));
        }
        if self.vocab_size <= UNK {
            return Err(Error::Argument(
                "vocab_size must cover the four special tokens".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Argument("dropout must be in [0, 1)".into()));
        }
        Ok(())
    }

    /// Width of a stylized word vector.
    pub fn stylized_dim(&self) -> usize {
        self.word_dim + self.style_dim
    }
}

/// Token inventory; indices 0..4 are the special tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl From<Vec<String>> for Vocab {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocab { tokens, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

impl Vocab {
    /// Specials followed by `words` in first-seen order, duplicates dropped.
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
        for w in words {
            let w = w.into();
            if !tokens.contains(&w) {
                tokens.push(w);
            }
        }
        Vocab::from(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn encode(&self, seq: &TokenSequence) -> Vec<usize> {
        seq.iter().map(|t| self.id(t)).collect()
    }

    /// Joins tokens with spaces, dropping special tokens.
    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter()
            .filter(|&&i| i > UNK)
            .map(|&i| self.tokens[i].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn is_special(id: usize) -> bool {
        id <= UNK
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmParams {
    pub w: usize,
    pub b: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionParams {
    /// H x state_dim
    pub wv: usize,
    /// H x M
    pub wh: usize,
    /// 1 x H
    pub wa: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchParams {
    pub att_lstm: LstmParams,
    pub attention: AttentionParams,
    pub lang_lstm: LstmParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Caption,
    Visual,
}

/// Tensor indices of every learned parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub word_embed: usize,
    pub style_embed: usize,
    pub style_proj_w: usize,
    pub style_proj_b: usize,
    pub encoder: LstmParams,
    pub visual_mean_w: usize,
    pub visual_mean_b: usize,
    pub visual_spatial_w: usize,
    pub visual_spatial_b: usize,
    pub caption: BranchParams,
    pub visual: BranchParams,
    pub out_w: usize,
    pub out_b: usize,
}

/// (name, rows, cols) for every tensor, in storage order.
pub fn tensor_shapes(c: &FusionConfig) -> Vec<(String, usize, usize)> {
    let m = c.hidden_dim;
    let h = c.attention_dim;
    let wd = c.stylized_dim();
    let caption_vec = c.dense_captions * m;
    let mut shapes = vec![
        ("word_embed".into(), c.vocab_size, c.word_dim),
        ("style_embed".into(), c.style_count, c.style_dim),
        ("style_proj.w".into(), c.style_dim, c.style_dim),
        ("style_proj.b".into(), c.style_dim, 1),
        ("encoder.w".into(), 4 * m, c.word_dim + m),
        ("encoder.b".into(), 4 * m, 1),
        ("visual_mean.w".into(), m, c.feature_dim),
        ("visual_mean.b".into(), m, 1),
        ("visual_spatial.w".into(), m, c.feature_dim),
        ("visual_spatial.b".into(), m, 1),
    ];
    // Attention LSTM input: [h_lang, context vector, w_t]; language LSTM
    // input: [attended, h_att]. Both run on the fused hidden state.
    for (branch, context) in [("caption", caption_vec), ("visual", m)] {
        shapes.extend([
            (format!("{branch}.att_lstm.w"), 4 * m, m + context + wd + m),
            (format!("{branch}.att_lstm.b"), 4 * m, 1),
            (format!("{branch}.attention.wv"), h, m),
            (format!("{branch}.attention.wh"), h, m),
            (format!("{branch}.attention.wa"), 1, h),
            (format!("{branch}.lang_lstm.w"), 4 * m, m + m + m),
            (format!("{branch}.lang_lstm.b"), 4 * m, 1),
        ]);
    }
    shapes.push(("out.w".into(), c.vocab_size, m));
    shapes.push(("out.b".into(), c.vocab_size, 1));
    shapes
}

impl Layout {
    pub fn new(c: &FusionConfig) -> Self {
        let m = c.hidden_dim;
        let lstm = |w| LstmParams {
            w,
            b: w + 1,
            hidden: m,
        };
        let branch = |base: usize| BranchParams {
            att_lstm: lstm(base),
            attention: AttentionParams {
                wv: base + 2,
                wh: base + 3,
                wa: base + 4,
            },
            lang_lstm: lstm(base + 5),
        };
        Layout {
            word_embed: 0,
            style_embed: 1,
            style_proj_w: 2,
            style_proj_b: 3,
            encoder: lstm(4),
            visual_mean_w: 6,
            visual_mean_b: 7,
            visual_spatial_w: 8,
            visual_spatial_b: 9,
            caption: branch(10),
            visual: branch(17),
            out_w: 24,
            out_b: 25,
        }
    }

    pub fn branch(&self, b: Branch) -> &BranchParams {
        match b {
            Branch::Caption => &self.caption,
            Branch::Visual => &self.visual,
        }
    }
}

/// All learned tensors of the two-branch fusion decoder plus the vocabulary
/// and style names needed to use them.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel {
    pub config: FusionConfig,
    pub vocab: Vocab,
    pub styles: Vec<String>,
    pub params: ParamStore,
    pub layout: Layout,
}

impl FusionModel {
    /// Randomly initialized model. `config.vocab_size` and
    /// `config.style_count` must match `vocab` and `styles`.
    pub fn new(config: FusionConfig, vocab: Vocab, styles: Vec<String>) -> Result<Self> {
        config.validate()?;
        if vocab.len() != config.vocab_size {
            return Err(Error::Argument(format!(
                "vocabulary has {} tokens, config says {}",
                vocab.len(),
                config.vocab_size
            )));
        }
        if styles.len() != config.style_count {
            return Err(Error::Argument(format!(
                "{} styles given, config says {}",
                styles.len(),
                config.style_count
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ParamStore::default();
        for (name, rows, cols) in tensor_shapes(&config) {
            let mut t = Tensor::uniform(name, rows, cols, config.init_scale, &mut rng);
            if t.name.ends_with("lstm.b") || t.name == "encoder.b" {
                // Forget-gate bias starts at one.
                let m = config.hidden_dim;
                t.data[..].iter_mut().for_each(|v| *v = 0.0);
                t.data[m..2 * m].iter_mut().for_each(|v| *v = 1.0);
            }
            params.push(t);
        }
        let layout = Layout::new(&config);
        Ok(FusionModel {
            config,
            vocab,
            styles,
            params,
            layout,
        })
    }

    /// Builds a model around existing tensors, checking names and shapes.
    pub fn from_parts(
        config: FusionConfig,
        vocab: Vocab,
        styles: Vec<String>,
        params: ParamStore,
    ) -> Result<Self> {
        config.validate()?;
        let shapes = tensor_shapes(&config);
        if params.len() != shapes.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                shapes.len(),
                params.len()
            )));
        }
        for (t, (name, rows, cols)) in params.iter().zip(&shapes) {
            if &t.name != name || t.rows != *rows || t.cols != *cols || t.data.len() != rows * cols {
                return Err(Error::Checkpoint(format!(
                    "tensor {} is {}x{}, expected {name} {rows}x{cols}",
                    t.name, t.rows, t.cols
                )));
            }
        }
        if vocab.len() != config.vocab_size || styles.len() != config.style_count {
            return Err(Error::Checkpoint(
                "vocabulary or style list disagrees with config".into(),
            ));
        }
        let layout = Layout::new(&config);
        Ok(FusionModel {
            config,
            vocab,
            styles,
            params,
            layout,
        })
    }

    pub fn style_index(&self, style: &str) -> Option<usize> {
        self.styles.iter().position(|s| s == style)
    }

    /// Zeroes every parameter of one decoder branch.
    pub fn zero_branch(&mut self, branch: Branch) {
        let b = *self.layout.branch(branch);
        for idx in [
            b.att_lstm.w,
            b.att_lstm.b,
            b.attention.wv,
            b.attention.wh,
            b.attention.wa,
            b.lang_lstm.w,
            b.lang_lstm.b,
        ] {
            self.params.get_mut(idx).fill(0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_matches_shapes() {
        let c = FusionConfig::toy();
        let shapes = tensor_shapes(&c);
        let l = Layout::new(&c);
        let name = |i: usize| shapes[i].0.as_str();
        assert_eq!(name(l.word_embed), "word_embed");
        assert_eq!(name(l.encoder.w), "encoder.w");
        assert_eq!(name(l.caption.attention.wa), "caption.attention.wa");
        assert_eq!(name(l.visual.att_lstm.b), "visual.att_lstm.b");
        assert_eq!(name(l.visual.lang_lstm.w), "visual.lang_lstm.w");
        assert_eq!(name(l.out_b), "out.b");
        assert_eq!(shapes.len(), 26);
    }

    #[test]
    fn vocab_maps_unknown_to_unk() {
        let v = Vocab::new(["dog", "rock", "dog"]);
        assert_eq!(v.len(), 6);
        assert_eq!(v.id("dog"), 4);
        assert_eq!(v.id("zebra"), UNK);
        assert_eq!(v.decode(&[BOS, 4, UNK, 5, EOS]), "dog rock");
    }

    #[test]
    fn config_validation() {
        assert!(FusionConfig::toy().validate().is_ok());
        let mut c = FusionConfig::toy();
        c.hidden_dim = 0;
        assert!(c.validate().is_err());
        let mut c = FusionConfig::toy();
        c.dense_captions = 4;
        assert!(c.validate().is_err());
    }
}

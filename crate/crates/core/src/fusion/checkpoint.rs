//! JSON checkpoint format.
//!
//! ```text
//! {
//!   "format": "caption-xray-fusion",
//!   "version": 1,
//!   "config": { ...FusionConfig fields... },
//!   "vocab": ["<pad>", "<bos>", "<eos>", "<unk>", ...],
//!   "styles": ["...", ...],
//!   "tensors": [ {"name": "word_embed", "rows": V, "cols": E, "data": [...]}, ... ]
//! }
//! ```
//!
//! `data` is row-major. Tensors appear in the fixed order of
//! [`tensor_shapes`](super::model::tensor_shapes). Floats are written with
//! shortest round-trip formatting, so saving a loaded checkpoint reproduces
//! the same bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::model::{FusionConfig, FusionModel, Vocab};
use super::params::{ParamStore, Tensor};

pub const CHECKPOINT_FORMAT: &str = "caption-xray-fusion";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    config: FusionConfig,
    vocab: Vocab,
    styles: Vec<String>,
    tensors: Vec<Tensor>,
}

pub fn checkpoint_to_string(model: &FusionModel) -> Result<String> {
    let ck = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        config: model.config.clone(),
        vocab: model.vocab.clone(),
        styles: model.styles.clone(),
        tensors: model.params.iter().cloned().collect(),
    };
    let mut s = serde_json::to_string(&ck)?;
    s.push('\n');
    Ok(s)
}

pub fn checkpoint_from_str(text: &str) -> Result<FusionModel> {
    let ck: Checkpoint =
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("malformed checkpoint: {e}")))?;
    if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint {} v{}",
            ck.format, ck.version
        )));
    }
    for t in &ck.tensors {
        if t.data.len() != t.rows * t.cols {
            return Err(Error::Checkpoint(format!(
                "tensor {} declares {}x{} but holds {} values",
                t.name,
                t.rows,
                t.cols,
                t.data.len()
            )));
        }
    }
    let params = ParamStore::from_tensors(ck.tensors);
    if !params.all_finite() {
        return Err(Error::Checkpoint("checkpoint holds non-finite values".into()));
    }
    FusionModel::from_parts(ck.config, ck.vocab, ck.styles, params)
}

pub fn save_checkpoint(model: &FusionModel, path: &Path) -> Result<()> {
    let s = checkpoint_to_string(model)?;
    std::fs::write(path, s).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn load_checkpoint(path: &Path) -> Result<FusionModel> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    checkpoint_from_str(&s)
}

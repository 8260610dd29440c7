//! Two-branch attention captioner at desk scale.
//!
//! A dense-caption LSTM encoder and a visual encoder feed two top-down
//! decoders (attention LSTM, additive attention, language LSTM) whose hidden
//! states are summed every step. Everything runs on `f64` with a hand-written
//! reverse-mode tape, so gradients can be checked against finite
//! differences. [`synth`] builds a toy world to train on and generates
//! corpora with known, injected errors.

mod beam;
mod checkpoint;
mod forward;
mod gradcheck;
mod graph;
mod model;
mod params;
pub mod synth;
mod train;

pub use beam::{beam_search, greedy_decode, BeamConfig, BeamOutput, DEFAULT_BEAM_SIZE, DEFAULT_NO_END_AFTER, DEFAULT_REPETITION_PENALTY};
pub use checkpoint::{checkpoint_from_str, checkpoint_to_string, load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use forward::{
    attend, decode_step, decode_step_detailed, encode_dense_captions, encode_image, encode_visual, stylize_word,
    BranchStates, DecoderState, Dropout, EncodedImage, ImageInput,
};
pub use gradcheck::{gradient_check, relative_error, GradCheckReport, FD_STEP, RELATIVE_ERROR_FLOOR};
pub use graph::{log_softmax, logsumexp, softmax};
pub use model::{
    tensor_shapes, Activation, Branch, FusionConfig, FusionModel, Vocab, BOS, EOS, PAD, SPECIAL_TOKENS, UNK,
};
pub use params::{ParamStore, Tensor};
pub use synth::{
    generate_synthetic_corpus, train_world_model, Corruption, FeatureRecord, SynthConfig, SyntheticCorpus, SyntheticWorld,
    WorldTraining,
};
pub use train::{evaluate_loss, train, Adam, TrainConfig, TrainReport, TrainingExample};

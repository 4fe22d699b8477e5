//! From-scratch differentiable core: composite embeddings, a
//! bidirectional gated recurrent encoder, task heads, reverse-mode
//! gradients, and the Adam optimizer, all over one flat f64 parameter
//! vector.

mod adam;
mod checkpoint;
mod encoder;
pub mod math;
mod model;
mod params;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use checkpoint::Checkpoint;
pub use encoder::{encode_vectors, Hidden};
pub use model::{
    embed, embed_ids, encode_tokens, forward_sequence, loss_and_gradients, suffix_class,
    suffix_class_value, suffix_probs, verb_class, verb_class_value, verb_probs, EmbedIds,
    SeqForward, TaskBatch, GRAD_CHUNKS,
};
pub use params::{
    HeadLayout, Layout, LstmLayout, MatSpec, ModelDims, ModelParams, ModelVariant, VocabSizes,
    SUFFIX_CLASSES, VERB_CLASSES,
};

//! Message-passing graph classifier with hand-derived gradients.

mod metrics;
mod model;
mod ops;

pub use metrics::{argmax, classification_metrics, evaluate, Metrics};
pub use model::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, ModelConfig,
    ModelWeights, Readout,
};
pub use ops::{
    aggregate, backward, bce_loss, classify, forward, forward_with_masks, layer_forward, one_hot,
    readout, sigmoid, train_batch, DropoutMask, ForwardCache, ForwardOutput, PROB_CLAMP,
};

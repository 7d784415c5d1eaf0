//! Compact CNN classifier: conv/ReLU/max-pool blocks, global average
//! pooling and one sigmoid output, trained with Adam on binary
//! cross-entropy.

mod engine;
mod model;
mod optim;
mod persist;
mod train;

pub use engine::{backward, forward, logits_with, loss_and_gradients, Gradients};
pub use model::{build_model, layout, Model, ModelConfig, TensorSpec, INPUT_CHANNELS};
pub use optim::{adam_step, bce_loss, AdamState, Param, PROB_EPS};
pub use persist::{decode_model, encode_model, load_model, save_model, FORMAT_VERSION, MAGIC};
pub use train::{
    predict, prepare_all, train, train_with_progress, EpochRecord, Example, MonitorStep, TrainConfig,
    TrainHistory, TrainingMonitor, MIN_DELTA,
};

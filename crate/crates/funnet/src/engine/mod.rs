//! Model container, reverse-mode gradients over all scalar coefficients,
//! loss, optimizer, training loop and gradient verification.
//!
//! A model is a fixed preprocessing prefix (local polynomial smoothing,
//! standardization) followed by trainable functional layers. All trainable
//! scalar coefficients live in one flat parameter vector; layers are shape
//! descriptors over it. Gradients are exact reverse-mode derivatives of the
//! mean batch loss, computed through the same kernels as the forward pass.

mod gradcheck;
mod model;
mod optim;
mod params_io;
mod train;

pub use gradcheck::{gradient_check, GradCheckEntry, GradCheckReport};
pub use model::{
    cross_entropy, HeadKind, LayerSpec, Model, ModelSpec, ParamBlock, ParamKind, Prediction,
};
pub use optim::OptimizerKind;
pub use train::{backward, evaluate, train, Gradients, HistoryRow, TrainConfig, TrainHistory};

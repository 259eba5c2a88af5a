//! Convolutional networks with analytic gradients, trained with Adam on MAE
//! loss to predict level behavioural characteristics from one-hot encodings.

mod adam;
mod layers;
mod network;
mod train;


pub use adam::{adam_step, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use layers::{conv_forward, dense_forward, maxpool_forward, Activation, ConvLayer, DenseLayer};
pub use network::{
    layer_output_shapes, Architecture, ForwardCache, Gradients, LayerSpec, Network, Shape,
};
pub use train::{
    build_network, mae_loss, predict_bcs, train, train_network, EarlyStopping, NetworkConfig,
    TargetNormalizer, TrainingHistory,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("channel mismatch: layer expects {expected} input channels, found {found}")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("shape underflow at layer {layer}: {detail}")]
    ShapeUnderflow { layer: usize, detail: String },
    #[error("training loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("stale forward cache: {0}")]
    StaleCache(String),
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
    #[error("network has no fitted target normalizer")]
    NotTrained,
    #[error("model io error: {0}")]
    Io(String),
    #[error("model serialization error: {0}")]
    Serde(String),
}

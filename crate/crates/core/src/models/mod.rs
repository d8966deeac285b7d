//! Equalizer and decoder networks: construction, training and inference.

mod data;
mod infer;
mod spec;
mod train;

pub use data::{Batch, Frame, FrameSetup};
pub use infer::{decode_nnd, equalize, threshold_bits};
pub use spec::{build_cnn_equalizer, build_nnd, NetworkSpec};
pub(crate) use train::leading;
pub use train::{
    continue_cnn_training, joint_finetune, train_cnn_equalizer, train_nnd_awgn, JointLoss, JointOptions, JointResult,
    TrainedNetwork, TrainingConfig,
};

//! Small neural-network engine: same-length 1-D convolutions, dense layers,
//! losses, reverse-mode gradients, Adam, and seeded initialization.

mod adam;
pub mod checkpoint;
mod layers;
mod loss;
mod network;
mod tensor;

pub use adam::Adam;
pub use layers::{sigmoid, Activation, ConvLayer, DenseLayer, LayerGrad};
pub use loss::{bce_loss, mse_loss, BCE_EPS};
pub use network::{Gradients, Init, Layer, Network, NetworkKind};
pub use tensor::Tensor;

//! Forward and hand-written backward passes for every layer the network uses.
//!
//! All functions are pure: they read their inputs and return fresh tensors.
//! Backward functions take the same inputs as the forward call plus the
//! upstream gradient and return gradients for every differentiable input.

mod activation;
mod bilinear;
mod conv;
mod loss;

pub use activation::{leaky_relu, leaky_relu_backward, DEFAULT_LRELU_SLOPE};
pub use bilinear::{bilinear_kernel, bilinear_taps};
pub use conv::{conv2d, conv2d_backward, transposed_conv2d, transposed_conv2d_backward, ConvGrads, ConvSpec};
pub use loss::{
    charbonnier_loss, charbonnier_loss_with, l2_loss, l2_loss_with, CharbonnierSpec, LossKind, LossOutput,
    Reduction,
};

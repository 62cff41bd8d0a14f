//! Minimal double-precision layers with hand-written backward passes.

pub mod ops;
pub mod params;

pub use ops::{
    avg_pool2, avg_pool2_backward, col2im, concat, dropout_mask, im2col, leaky_relu, leaky_relu_backward, relu,
    relu_backward, sigmoid, split, upsample2, upsample2_backward, Conv2d, ConvTranspose2d, InstanceNorm, Linear,
};
pub use params::{Adam, ParamId, ParamSet};

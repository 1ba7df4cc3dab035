//! Laplacian pyramid super-resolution with a hand-written layer engine.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`]: rank-4 tensors, learnable parameters and the
//!   finite-difference gradient oracle
//! - [`layers`]: convolution, transposed convolution, leaky ReLU, the
//!   Charbonnier and L2 penalties, and the bilinear upsampling kernel
//! - [`model`]: the two-branch pyramid network with progressive outputs
//! - [`checkpoint`]: the `.lpsr` file format
//! - [`data`]: image I/O, colour conversion, bicubic resampling, ground-truth
//!   pyramids and the augmented patch sampler
//! - [`train`]: the deeply supervised objective, SGD with momentum and the
//!   step learning-rate schedule
//! - [`metrics`] and [`eval`]: PSNR/SSIM and the dataset benchmark harness
//! - [`gradcheck`]: the finite-difference verification suite
//! - [`cli`]: the `lapsrn` command-line front end

pub mod checkpoint;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod layers;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use model::{build_model, count_layers, LapSrn, LapSrnConfig, MultiScaleOutput, UpsamplerInit};
pub use tensor::{Parameter, Real, Shape4, Tensor4};

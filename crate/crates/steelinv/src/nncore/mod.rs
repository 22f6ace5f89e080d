//! Deterministic dense-network core: matrices, residual-ELU perceptrons,
//! reverse-mode gradients (including input gradients), MSE, and Adam.
//!
//! Everything here is single-threaded and bit-deterministic: identical
//! seeds and inputs produce identical outputs, gradients, and updates.

mod adam;
mod gradcheck;
mod matrix;
mod mlp;
mod persist;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{grad_check, GradCheckLoss};
pub use matrix::{dot, Matrix};
pub use mlp::{elu, mse, ForwardCache, GradientTape, LayerGrad, LinearLayer, Mlp, OutputMode, HIDDEN_BLOCKS};
pub use persist::{LayerDoc, ModelDoc, MODEL_SCHEMA_VERSION};

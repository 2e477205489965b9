//! Small feed-forward network core with hand-written backward passes.
//!
//! Parameters for a stack of layers live in one flat `Vec<Tensor>`, two
//! tensors (weight, bias) per Dense or Conv2d layer in stack order. Gradients
//! and optimizer moments use the same layout.

mod gradcheck;
mod layers;
mod loss;
mod optim;
mod tensor;

use thiserror::Error;

pub use gradcheck::{fd_max_error, grad_check, relative_error, Loss, FD_STEP};
pub use layers::{backward, chain_shapes, forward, init_params, kaiming_init, Cache, LayerSpec, Padding, KERNEL};
pub use loss::{argmax_rows, mse, softmax, softmax_ce};
pub use optim::{adam_step, AdamConfig, AdamState};
pub use tensor::Tensor;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("label {label} out of range for {classes} classes")]
    BadLabel { label: usize, classes: usize },
}

//! Minimal dense neural-network engine: tensors, layer forward/backward
//! passes, Adam, finite-difference gradient checks, and binary checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod ops;
pub mod tensor;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{central_diff_gradient, grad_check, max_rel_error, DIFF_STEP};
pub use ops::{
    conv1d_backward, conv1d_forward, cross_entropy, dense_backward, dense_forward, dropout,
    dropout_backward, global_max_pool, global_max_pool_backward, relu, relu_backward, softmax,
    softmax_ce_backward, DropoutMode, LOG_EPS,
};
pub use tensor::Tensor;

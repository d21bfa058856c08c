//! Secure protocols over replicated shares.

pub mod linear;
pub mod nonlinear;

pub use linear::{
    add_to_rep, hadamard, matmult, mul_public_fixed, mul_raw, mul_sum_raw, mult, mult_vec, open, truncate,
};
pub use nonlinear::{divide, drelu, drelu_window, inv_sqrt, pow_bound, relu, relu_with_mask, softmax, PowBound};
pub mod array_access;

pub use array_access::{access_batch, array_access, array_access_sync_baseline, Schedule, SharedArray};

//! Graph-level anomaly detection by training a discriminator against
//! pseudo-anomalous graphs generated from the normal training set.
//!
//! Three training procedures are provided: an adversarial one with a
//! noise-to-graph MLP generator, an adversarial one with a variational
//! perturbation generator, and a non-adversarial joint training of the
//! perturbation generator with a classifier. See [`train`].

// Validation uses `!(x > 0.0)` style checks so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod commands;
pub mod config;
pub mod data;
pub mod eval;
pub mod exec;
pub mod gradcheck;
pub mod nn;
pub mod synth2d;
pub mod tensor;
pub mod train;

pub use autodiff::{Gradients, Tape, Var};
pub use exec::Exec;
pub use tensor::{Shape, Tensor, TensorError};

//! The coded signed-distance MLP `f(q, z)`: ReLU hidden layers, tanh output.
//!
//! Batches are `input_dim × n` row-major matrices with one column per query,
//! the layout where a single code is repeated for every query point. Every
//! output and input gradient is computed with the same per-element
//! summation order for any batch size, so batching is bit-exact.

mod adam;
mod checkpoint;
mod loss;
mod mlp;
mod train;

pub use adam::{AdamState, BETA1, BETA2, EPSILON};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT_VERSION};
pub use loss::{backward_params, clamped_l1_loss};
pub use mlp::{mlp_init, Mlp, Real, CHUNK};
pub use train::{evaluate_loss, split_indices, train, train_from, TrainConfig, TrainReport};

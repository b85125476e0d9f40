//! Dense arithmetic, seeded randomness and reverse-mode differentiation.

pub mod gradcheck;
mod graph;
mod ops;
mod rng;
mod tensor;

pub use gradcheck::{check_gradients, relative_error, GradCheck};
pub use graph::{Graph, NodeId};
pub use ops::{bilinear_resize, softmax_row};
pub use rng::SeededRng;
pub use tensor::Tensor2D;

#[cfg(test)]
mod tests;

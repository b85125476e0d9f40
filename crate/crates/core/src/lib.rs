//! Training-time supervision of cross-attention with instance masks, on a
//! synthetic referring-expression grounding task.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: tensors, seeded randomness, reverse-mode differentiation.
//! * [`prompt`]: vocabulary and the rule-based referring-prompt refiner.
//! * [`scenes`]: synthetic scenes, instance masks and the JSONL dataset.
//! * [`model`]: a small text-to-visual cross-attention transformer.
//! * [`align`]: noun-attention extraction, layer fusion and mask losses.
//! * [`metrics`]: attention localization metrics and their report.

pub mod error;
pub mod numerics;
pub mod prompt;
pub mod scenes;
pub mod model;
pub mod align;
pub mod metrics;

pub use error::{Error, Result};
pub use numerics::{Graph, NodeId, SeededRng, Tensor2D};

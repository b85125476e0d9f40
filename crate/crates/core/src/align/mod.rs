//! Mask supervision of cross-attention: noun-map extraction, layer fusion and
//! the alignment losses.

mod check;
mod loss;
mod select;

pub use loss::{
    attn_loss, extract_noun_attention, fuse, resize_to_mask, swim_step_loss, FusionMethod,
    LossKind, SwimLoss, SwimSettings, CLAMP_EPS, DEFAULT_FOCAL_ALPHA, DEFAULT_FOCAL_GAMMA, SMOOTH,
};
pub use check::{gradcheck_suite, model_gradcheck_suite, LOSS_STEP};
pub use select::LayerSelection;

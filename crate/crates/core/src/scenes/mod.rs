//! Synthetic scenes standing in for video frames, their instance masks, and
//! the JSONL dataset of refined-prompt records.

mod generate;
mod io;
mod mask;
mod object;

pub use generate::{
    generate_dataset, generate_record, generate_scene, DatasetRecord, GenConfig, ModelInput,
    MAX_EDGE, MAX_PLACEMENT_ATTEMPTS, MIN_EDGE,
};
pub use io::{read_dataset, record_to_line, write_dataset};
pub use mask::InstanceMask;
pub use object::{Attributes, Color, Scene, SceneObject, Shape, Texture, FEATURE_DIM};

//! Toy vision-language transformer: parameters, forward pass and file format.

mod forward;
mod io;
mod params;
#[cfg(test)]
mod tests;

pub use forward::{encode_input, forward, task_loss, AttentionStack, BoundParams, EncodedInput, ForwardTrace};
pub use io::{decode_params, encode_params, load_params, save_params, FORMAT_VERSION, MAGIC};
pub use params::{ModelConfig, ModelParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{SeededRng, Tensor2D};

/// Shape hyperparameters of the toy transformer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub ffn_mult: usize,
    pub vocab_size: usize,
    pub visual_feature_dim: usize,
    pub max_text_len: usize,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("d", self.d),
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("ffn_mult", self.ffn_mult),
            ("vocab_size", self.vocab_size),
            ("visual_feature_dim", self.visual_feature_dim),
            ("max_text_len", self.max_text_len),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if !self.d.is_multiple_of(self.n_heads) {
            return Err(Error::Config(format!(
                "d = {} is not divisible by n_heads = {}",
                self.d, self.n_heads
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d / self.n_heads
    }

    pub fn ffn_dim(&self) -> usize {
        self.d * self.ffn_mult
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Init {
    /// Uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)).
    Glorot,
    /// Normal(0, 0.02).
    Embedding,
    Ones,
    Zeros,
}

/// Per-layer tensors, in storage order.
pub(crate) const LAYER_TENSORS: [&str; 13] = [
    "ln_self", "self_q", "self_k", "self_v", "self_o", "ln_cross", "cross_q", "cross_k", "cross_v",
    "cross_o", "ln_ffn", "ffn_in", "ffn_out",
];

pub(crate) const GLOBAL_HEAD: usize = 4;

/// Name, shape and initializer of every tensor, in storage order.
pub(crate) fn layout(c: &ModelConfig) -> Vec<(String, usize, usize, Init)> {
    let d = c.d;
    let mut out = vec![
        ("token_emb".to_string(), c.vocab_size, d, Init::Embedding),
        ("pos_emb".to_string(), c.max_text_len, d, Init::Embedding),
        ("visual_proj".to_string(), c.visual_feature_dim, d, Init::Glorot),
        ("visual_bias".to_string(), 1, d, Init::Zeros),
    ];
    for l in 0..c.n_layers {
        for name in LAYER_TENSORS {
            let (rows, cols, init) = match name {
                "ln_self" | "ln_cross" | "ln_ffn" => (1, d, Init::Ones),
                "ffn_in" => (d, c.ffn_dim(), Init::Glorot),
                "ffn_out" => (c.ffn_dim(), d, Init::Glorot),
                _ => (d, d, Init::Glorot),
            };
            out.push((format!("layer{l}.{name}"), rows, cols, init));
        }
    }
    out.push(("ln_final".to_string(), 1, d, Init::Ones));
    out.push(("answer_head".to_string(), d, c.vocab_size, Init::Glorot));
    out
}

/// All trainable tensors of the model, in a fixed order.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub(crate) config: ModelConfig,
    pub(crate) names: Vec<String>,
    pub(crate) tensors: Vec<Tensor2D>,
}

impl ModelParams {
    pub fn init(config: ModelConfig, rng: &mut SeededRng) -> Result<Self> {
        config.validate()?;
        let mut names = Vec::new();
        let mut tensors = Vec::new();
        for (name, rows, cols, init) in layout(&config) {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| match init {
                    Init::Glorot => rng.uniform_in(-bound, bound),
                    Init::Embedding => rng.normal(0.0, 0.02),
                    Init::Ones => 1.0,
                    Init::Zeros => 0.0,
                })
                .collect();
            names.push(name);
            tensors.push(Tensor2D::new(rows, cols, data)?);
        }
        Ok(Self {
            config,
            names,
            tensors,
        })
    }

    /// Reassembles parameters from named tensors, checking them against the
    /// layout implied by `config`.
    pub fn from_named(config: ModelConfig, named: Vec<(String, Tensor2D)>) -> Result<Self> {
        config.validate()?;
        let expected = layout(&config);
        if named.len() != expected.len() {
            return Err(Error::Format(format!(
                "{} tensors, config implies {}",
                named.len(),
                expected.len()
            )));
        }
        for ((name, t), (ename, rows, cols, _)) in named.iter().zip(&expected) {
            if name != ename || t.shape() != (*rows, *cols) {
                return Err(Error::Format(format!(
                    "tensor {name} {}x{} does not match expected {ename} {rows}x{cols}",
                    t.rows(),
                    t.cols()
                )));
            }
        }
        let (names, tensors) = named.into_iter().unzip();
        Ok(Self {
            config,
            names,
            tensors,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor2D] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor2D] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor2D> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor2D> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(&mut self.tensors[i])
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor2D::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor2D::is_finite)
    }
}

use crate::error::{Error, Result};
use crate::numerics::{Graph, NodeId, Tensor2D};
use crate::prompt::{tokenize_and_locate, Vocabulary};
use crate::scenes::ModelInput;

use super::params::{ModelParams, GLOBAL_HEAD, LAYER_TENSORS};

/// Model parameters placed on a graph, one node per tensor.
#[derive(Clone, Debug)]
pub struct BoundParams {
    nodes: Vec<NodeId>,
    n_layers: usize,
}

impl BoundParams {
    /// Binds `params` as trainable leaves.
    pub fn trainable(graph: &mut Graph, params: &ModelParams) -> Self {
        Self::bind(graph, params, true)
    }

    /// Binds `params` as constants (no gradients are tracked).
    pub fn frozen(graph: &mut Graph, params: &ModelParams) -> Self {
        Self::bind(graph, params, false)
    }

    fn bind(graph: &mut Graph, params: &ModelParams, trainable: bool) -> Self {
        let nodes = params
            .tensors()
            .iter()
            .map(|t| {
                if trainable {
                    graph.param(t.clone())
                } else {
                    graph.constant(t.clone())
                }
            })
            .collect();
        Self {
            nodes,
            n_layers: params.config().n_layers,
        }
    }

    /// Wraps nodes that already hold the tensors of `config`, in storage
    /// order. Used when the caller owns the leaves (e.g. gradient checks).
    pub fn from_nodes(config: &super::ModelConfig, nodes: Vec<NodeId>) -> Result<Self> {
        let expected = super::params::layout(config).len();
        if nodes.len() != expected {
            return Err(Error::shape(format!("{} parameter nodes, expected {expected}", nodes.len())));
        }
        Ok(Self {
            nodes,
            n_layers: config.n_layers,
        })
    }

    /// Nodes in parameter storage order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    fn global(&self, i: usize) -> NodeId {
        self.nodes[i]
    }

    fn layer(&self, l: usize, name: &str) -> NodeId {
        let k = LAYER_TENSORS
            .iter()
            .position(|n| *n == name)
            .expect("known layer tensor");
        self.nodes[GLOBAL_HEAD + l * LAYER_TENSORS.len() + k]
    }

    fn tail(&self, k: usize) -> NodeId {
        self.nodes[GLOBAL_HEAD + self.n_layers * LAYER_TENSORS.len() + k]
    }

    /// Collects the accumulated gradients in storage order (zeros where a
    /// parameter was not reached).
    pub fn gradients(&self, graph: &Graph) -> Vec<Tensor2D> {
        self.nodes
            .iter()
            .map(|&id| {
                graph.grad(id).cloned().unwrap_or_else(|| {
                    let (r, c) = graph.value(id).shape();
                    Tensor2D::zeros(r, c)
                })
            })
            .collect()
    }
}

/// Token ids, visual features and tagged span of one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedInput {
    pub ids: Vec<usize>,
    pub features: Tensor2D,
    pub span: (usize, usize),
    pub grid: (usize, usize),
}

/// Encodes the model-visible part of a record. `<ins>` markers are consumed
/// here and only the span survives.
pub fn encode_input(input: ModelInput<'_>, vocab: &Vocabulary) -> Result<EncodedInput> {
    let located = tokenize_and_locate(input.refined_prompt, vocab)?;
    Ok(EncodedInput {
        ids: located.ids,
        features: input.scene.features(),
        span: located.span,
        grid: (input.scene.grid_h, input.scene.grid_w),
    })
}

/// Result of one forward pass, living on the graph it was built on.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    /// 1×vocab answer logits read from the final text position.
    pub logits: NodeId,
    /// `attention[l][h]`: L_t×L_v cross-attention probabilities of layer `l`,
    /// head `h`.
    pub attention: Vec<Vec<NodeId>>,
    pub text_len: usize,
    pub visual_len: usize,
}

/// Plain copy of the captured cross-attention rows.
pub type AttentionStack = Vec<Vec<Tensor2D>>;

impl ForwardTrace {
    pub fn attention_values(&self, graph: &Graph) -> AttentionStack {
        self.attention
            .iter()
            .map(|heads| heads.iter().map(|&h| graph.value(h).clone()).collect())
            .collect()
    }
}

fn norm(g: &mut Graph, x: NodeId, gain: NodeId) -> NodeId {
    let n = g.layer_norm(x);
    g.mul_row(n, gain)
}

/// Multi-head attention of `q` (queries) over `k`/`v`; returns the
/// concatenated head outputs and the per-head probability nodes.
fn attend(
    g: &mut Graph,
    q: NodeId,
    k: NodeId,
    v: NodeId,
    n_heads: usize,
    head_dim: usize,
    causal: bool,
) -> (NodeId, Vec<NodeId>) {
    let scale = 1.0 / (head_dim as f64).sqrt();
    let mut outs = Vec::with_capacity(n_heads);
    let mut probs = Vec::with_capacity(n_heads);
    for h in 0..n_heads {
        let (qh, kh, vh) = if n_heads == 1 {
            (q, k, v)
        } else {
            (
                g.slice_cols(q, h * head_dim, head_dim),
                g.slice_cols(k, h * head_dim, head_dim),
                g.slice_cols(v, h * head_dim, head_dim),
            )
        };
        let scores = g.matmul_bt(qh, kh);
        let scores = g.scale(scores, scale);
        let p = if causal {
            g.causal_softmax(scores)
        } else {
            g.softmax(scores)
        };
        outs.push(g.matmul(p, vh));
        probs.push(p);
    }
    let out = if n_heads == 1 { outs[0] } else { g.concat_cols(&outs) };
    (out, probs)
}

/// Runs the transformer over one sample.
///
/// Each block applies pre-norm causal self-attention over the text, pre-norm
/// cross-attention from text queries to visual keys/values, and a pre-norm
/// feed-forward layer, each with a residual connection.
pub fn forward(
    g: &mut Graph,
    params: &BoundParams,
    config: &super::ModelConfig,
    ids: &[usize],
    features: &Tensor2D,
) -> Result<ForwardTrace> {
    if ids.is_empty() {
        return Err(Error::invalid("empty text input"));
    }
    if ids.len() > config.max_text_len {
        return Err(Error::invalid(format!(
            "text length {} exceeds max_text_len {}",
            ids.len(),
            config.max_text_len
        )));
    }
    if let Some(bad) = ids.iter().find(|&&i| i >= config.vocab_size) {
        return Err(Error::invalid(format!("token id {bad} outside the vocabulary")));
    }
    if features.cols() != config.visual_feature_dim || features.rows() == 0 {
        return Err(Error::shape(format!(
            "visual features are {}x{}, expected Lx{}",
            features.rows(),
            features.cols(),
            config.visual_feature_dim
        )));
    }
    let (n_heads, head_dim) = (config.n_heads, config.head_dim());

    let tok = g.gather_rows(params.global(0), ids);
    let positions: Vec<usize> = (0..ids.len()).collect();
    let pos = g.gather_rows(params.global(1), &positions);
    let mut h = g.add(tok, pos);

    let feats = g.constant(features.clone());
    let visual = g.matmul(feats, params.global(2));
    let visual = g.add_row(visual, params.global(3));

    let mut attention = Vec::with_capacity(config.n_layers);
    for l in 0..config.n_layers {
        let x = norm(g, h, params.layer(l, "ln_self"));
        let q = g.matmul(x, params.layer(l, "self_q"));
        let k = g.matmul(x, params.layer(l, "self_k"));
        let v = g.matmul(x, params.layer(l, "self_v"));
        let (o, _) = attend(g, q, k, v, n_heads, head_dim, true);
        let o = g.matmul(o, params.layer(l, "self_o"));
        h = g.add(h, o);

        let x = norm(g, h, params.layer(l, "ln_cross"));
        let q = g.matmul(x, params.layer(l, "cross_q"));
        let k = g.matmul(visual, params.layer(l, "cross_k"));
        let v = g.matmul(visual, params.layer(l, "cross_v"));
        let (o, probs) = attend(g, q, k, v, n_heads, head_dim, false);
        let o = g.matmul(o, params.layer(l, "cross_o"));
        h = g.add(h, o);
        attention.push(probs);

        let x = norm(g, h, params.layer(l, "ln_ffn"));
        let up = g.matmul(x, params.layer(l, "ffn_in"));
        let up = g.gelu(up);
        let down = g.matmul(up, params.layer(l, "ffn_out"));
        h = g.add(h, down);
    }

    let last = g.gather_rows(h, &[ids.len() - 1]);
    let last = norm(g, last, params.tail(0));
    let logits = g.matmul(last, params.tail(1));
    Ok(ForwardTrace {
        logits,
        attention,
        text_len: ids.len(),
        visual_len: features.rows(),
    })
}

/// Cross-entropy of the answer logits against `answer`.
pub fn task_loss(g: &mut Graph, logits: NodeId, answer: usize) -> Result<NodeId> {
    let vocab = g.value(logits).cols();
    if answer >= vocab {
        return Err(Error::invalid(format!("answer id {answer} outside vocabulary of {vocab}")));
    }
    Ok(g.cross_entropy(logits, answer))
}

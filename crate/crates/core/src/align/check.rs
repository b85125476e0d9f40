use crate::error::Result;
use crate::model::{forward, task_loss, BoundParams, ModelConfig, ModelParams};
use crate::numerics::{check_gradients, GradCheck, SeededRng, Tensor2D};
use crate::scenes::InstanceMask;

use super::{attn_loss, fuse, swim_step_loss, FusionMethod, LayerSelection, LossKind, SwimSettings};

/// Finite-difference step for the loss and model suites.
pub const LOSS_STEP: f64 = 1e-5;

/// Finite-difference check of each loss kind on random 4×4 instances: two
/// layer maps in (0.05, 0.95), mean-fused, against a random non-empty mask.
///
/// `flip_sign` routes the loss through `2·detach(L) - L`, which keeps the value
/// and negates the gradient; the check must then fail.
pub fn gradcheck_suite(trials: usize, seed: u64, flip_sign: bool) -> Result<Vec<(LossKind, GradCheck)>> {
    let mut rng = SeededRng::new(seed);
    let selection = LayerSelection::try_from(vec![1, 2])?;
    let mut out = Vec::new();
    for kind in LossKind::all() {
        let mut report = GradCheck::default();
        for _ in 0..trials {
            let maps: Vec<Tensor2D> = (0..2)
                .map(|_| {
                    let data = (0..16).map(|_| rng.uniform_in(0.05, 0.95)).collect();
                    Tensor2D::new(4, 4, data)
                })
                .collect::<Result<_>>()?;
            let mut bits: Vec<bool> = (0..16).map(|_| rng.bernoulli(0.4)).collect();
            let k = rng.below(16);
            bits[k] = true;
            let mask = InstanceMask::from_bits(4, 4, bits)?;
            let r = check_gradients(&maps, LOSS_STEP, 1, |g, ids| {
                let fused = fuse(g, ids, &selection, FusionMethod::Mean)?;
                let loss = attn_loss(g, fused, &mask, kind)?;
                Ok(if flip_sign {
                    let frozen = g.detach(loss);
                    let twice = g.scale(frozen, 2.0);
                    g.sub(twice, loss)
                } else {
                    loss
                })
            })?;
            report = report.merge(r);
        }
        out.push((kind, report));
    }
    Ok(out)
}

/// Finite-difference check of the whole training objective (task loss plus
/// BCE attention loss) on a tiny model over a 3×3 grid. Every parameter
/// coordinate is perturbed; each trial draws fresh weights and inputs.
pub fn model_gradcheck_suite(trials: usize, seed: u64) -> Result<GradCheck> {
    let config = ModelConfig {
        d: 8,
        n_layers: 2,
        n_heads: 2,
        ffn_mult: 2,
        vocab_size: 10,
        visual_feature_dim: 6,
        max_text_len: 6,
    };
    let settings = SwimSettings {
        selection: LayerSelection::default_for(config.n_layers),
        fusion: FusionMethod::Mean,
        loss: LossKind::Bce,
        lambda: 1.0,
    };
    let mut rng = SeededRng::new(seed);
    let mut report = GradCheck::default();
    for _ in 0..trials {
        let params = ModelParams::init(config, &mut rng)?;
        let feats = Tensor2D::new(9, 6, (0..54).map(|_| rng.uniform_in(-1.0, 1.0)).collect())?;
        let len = rng.between(2, config.max_text_len);
        let ids: Vec<usize> = (0..len).map(|_| rng.below(config.vocab_size)).collect();
        let start = rng.below(len);
        let span = (start, rng.between(start, len - 1));
        let mut bits: Vec<bool> = (0..9).map(|_| rng.bernoulli(0.3)).collect();
        bits[rng.below(9)] = true;
        let mask = InstanceMask::from_bits(3, 3, bits)?;
        let answer = rng.below(config.vocab_size);
        let r = check_gradients(params.tensors(), LOSS_STEP, 1, |g, nodes| {
            let bound = BoundParams::from_nodes(&config, nodes.to_vec())?;
            let trace = forward(g, &bound, &config, &ids, &feats)?;
            let task = task_loss(g, trace.logits, answer)?;
            Ok(swim_step_loss(g, &trace, span, (3, 3), &mask, &settings, task)?.total)
        })?;
        report = report.merge(r);
    }
    Ok(report)
}

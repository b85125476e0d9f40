use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ForwardTrace;
use crate::numerics::{Graph, NodeId, Tensor2D};
use crate::scenes::InstanceMask;

use super::LayerSelection;

/// Fused maps are clamped into `[CLAMP_EPS, 1 - CLAMP_EPS]`.
pub const CLAMP_EPS: f64 = 1e-7;
/// Additive smoothing of the Dice and soft-IoU ratios.
pub const SMOOTH: f64 = 1.0;
pub const DEFAULT_FOCAL_ALPHA: f64 = 0.25;
pub const DEFAULT_FOCAL_GAMMA: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMethod {
    Mean,
    Add,
    Pool,
    Prod,
}

impl FusionMethod {
    pub const ALL: [FusionMethod; 4] = [Self::Mean, Self::Add, Self::Pool, Self::Prod];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::Add => "add",
            Self::Pool => "pool",
            Self::Prod => "prod",
        }
    }
}

impl fmt::Display for FusionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FusionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown fusion {s:?} (mean, add, pool, prod)")))
    }
}

/// Alignment loss between the fused map and the mask.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum LossKind {
    Bce,
    Dice,
    Focal { alpha: f64, gamma: f64 },
    Miou,
}

impl LossKind {
    pub fn focal() -> Self {
        Self::Focal {
            alpha: DEFAULT_FOCAL_ALPHA,
            gamma: DEFAULT_FOCAL_GAMMA,
        }
    }

    /// The four kinds with default focal parameters.
    pub fn all() -> [LossKind; 4] {
        [Self::Bce, Self::Dice, Self::focal(), Self::Miou]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Bce => "bce",
            Self::Dice => "dice",
            Self::Focal { .. } => "focal",
            Self::Miou => "miou",
        }
    }

    // negated comparisons so that NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if let Self::Focal { alpha, gamma } = *self {
            if !(alpha > 0.0 && alpha < 1.0) || !(gamma >= 0.0) || !gamma.is_finite() {
                return Err(Error::Config(format!(
                    "focal needs alpha in (0,1) and gamma >= 0, got alpha={alpha} gamma={gamma}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::all()
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown loss {s:?} (bce, dice, focal, miou)")))
    }
}

/// Per-layer H×W maps of the tagged span's attention, averaged over heads and
/// span positions.
pub fn extract_noun_attention(
    g: &mut Graph,
    trace: &ForwardTrace,
    span: (usize, usize),
    grid: (usize, usize),
) -> Result<Vec<NodeId>> {
    let (start, end) = span;
    if start > end || end >= trace.text_len {
        return Err(Error::invalid(format!(
            "span ({start}, {end}) outside a text of {} tokens",
            trace.text_len
        )));
    }
    if grid.0 * grid.1 != trace.visual_len {
        return Err(Error::shape(format!(
            "grid {}x{} does not cover {} visual tokens",
            grid.0, grid.1, trace.visual_len
        )));
    }
    let rows: Vec<usize> = (start..=end).collect();
    let weights = g.constant(Tensor2D::filled(1, rows.len(), 1.0 / rows.len() as f64));
    let mut maps = Vec::with_capacity(trace.attention.len());
    for heads in &trace.attention {
        let per_head: Vec<NodeId> = heads.iter().map(|&p| g.gather_rows(p, &rows)).collect();
        let avg = if per_head.len() == 1 { per_head[0] } else { g.mean_of(&per_head) };
        let row = if rows.len() == 1 { avg } else { g.matmul(weights, avg) };
        maps.push(g.reshape(row, grid.0, grid.1));
    }
    Ok(maps)
}

/// Brings every map to `shape`; maps already at that shape are returned as is.
pub fn resize_to_mask(g: &mut Graph, maps: &[NodeId], shape: (usize, usize)) -> Result<Vec<NodeId>> {
    maps.iter()
        .map(|&m| {
            if g.value(m).shape() == shape {
                Ok(m)
            } else {
                g.resize(m, shape.0, shape.1)
            }
        })
        .collect()
}

/// Reduces the selected layers (1-based) into one map clamped into
/// `[CLAMP_EPS, 1 - CLAMP_EPS]`.
pub fn fuse(g: &mut Graph, maps: &[NodeId], selection: &LayerSelection, method: FusionMethod) -> Result<NodeId> {
    if selection.max_layer() > maps.len() {
        return Err(Error::invalid(format!(
            "selection {selection} exceeds the {} captured layers",
            maps.len()
        )));
    }
    let picked: Vec<NodeId> = selection.layers().iter().map(|&l| maps[l - 1]).collect();
    let first = picked[0];
    let shape = g.value(first).shape();
    if picked.iter().any(|&m| g.value(m).shape() != shape) {
        return Err(Error::shape("fused maps differ in shape"));
    }
    let fused = match method {
        FusionMethod::Mean => g.mean_of(&picked),
        FusionMethod::Pool => g.max_of(&picked),
        FusionMethod::Add => picked[1..].iter().fold(first, |acc, &m| g.add(acc, m)),
        FusionMethod::Prod => picked[1..].iter().fold(first, |acc, &m| g.mul(acc, m)),
    };
    Ok(g.clamp(fused, CLAMP_EPS, 1.0 - CLAMP_EPS))
}

/// Scalar alignment loss between a clamped map and the mask.
pub fn attn_loss(g: &mut Graph, fused: NodeId, mask: &InstanceMask, kind: LossKind) -> Result<NodeId> {
    kind.validate()?;
    let (h, w) = g.value(fused).shape();
    if (h, w) != (mask.height(), mask.width()) {
        return Err(Error::shape(format!(
            "map is {h}x{w}, mask is {}x{}",
            mask.height(), mask.width()
        )));
    }
    let m = mask.to_tensor();
    let m_sum = m.sum();
    let loss = match kind {
        LossKind::Bce => {
            let pos = g.constant(m.clone());
            let neg = g.constant(m.map(|v| 1.0 - v));
            let log_a = g.log(fused);
            let one_minus = g.rsub(1.0, fused);
            let log_na = g.log(one_minus);
            let a = g.mul(pos, log_a);
            let b = g.mul(neg, log_na);
            let s = g.add(a, b);
            let mean = g.mean(s);
            g.scale(mean, -1.0)
        }
        LossKind::Focal { alpha, gamma } => {
            let pos = g.constant(m.map(|v| alpha * v));
            let neg = g.constant(m.map(|v| (1.0 - alpha) * (1.0 - v)));
            let one_minus = g.rsub(1.0, fused);
            let log_a = g.log(fused);
            let log_na = g.log(one_minus);
            let wp = g.powf(one_minus, gamma);
            let wn = g.powf(fused, gamma);
            let a = g.mul(pos, wp);
            let a = g.mul(a, log_a);
            let b = g.mul(neg, wn);
            let b = g.mul(b, log_na);
            let s = g.add(a, b);
            let mean = g.mean(s);
            g.scale(mean, -1.0)
        }
        LossKind::Dice | LossKind::Miou => {
            let mc = g.constant(m);
            let prod = g.mul(fused, mc);
            let inter = g.sum(prod);
            let total = g.sum(fused);
            let (num, den) = if kind == LossKind::Dice {
                let num = g.scale(inter, 2.0);
                (g.offset(num, SMOOTH), g.offset(total, m_sum + SMOOTH))
            } else {
                let union = g.sub(total, inter);
                (g.offset(inter, SMOOTH), g.offset(union, m_sum + SMOOTH))
            };
            let ratio = g.div(num, den);
            g.rsub(1.0, ratio)
        }
    };
    Ok(loss)
}

/// How the attention supervision is composed during a training step.
#[derive(Clone, Debug, PartialEq)]
pub struct SwimSettings {
    pub selection: LayerSelection,
    pub fusion: FusionMethod,
    pub loss: LossKind,
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SwimLoss {
    pub total: NodeId,
    pub attn: NodeId,
}

/// `task + lambda * attn` over extract, resize and fuse. With `lambda == 0`
/// the total is the task node itself and the attention loss is only
/// reported.
pub fn swim_step_loss(
    g: &mut Graph,
    trace: &ForwardTrace,
    span: (usize, usize),
    grid: (usize, usize),
    mask: &InstanceMask,
    settings: &SwimSettings,
    task: NodeId,
) -> Result<SwimLoss> {
    let maps = extract_noun_attention(g, trace, span, grid)?;
    let maps = resize_to_mask(g, &maps, (mask.height(), mask.width()))?;
    let fused = fuse(g, &maps, &settings.selection, settings.fusion)?;
    let attn = attn_loss(g, fused, mask, settings.loss)?;
    let total = if settings.lambda == 0.0 {
        task
    } else {
        let weighted = g.scale(attn, settings.lambda);
        g.add(task, weighted)
    };
    Ok(SwimLoss { total, attn })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{forward, BoundParams, ModelConfig, ModelParams};
    use crate::numerics::SeededRng;
    use proptest::prelude::*;

    fn value_loss(a: &Tensor2D, mask: &InstanceMask, kind: LossKind) -> f64 {
        let mut g = Graph::new();
        let n = g.constant(a.clone());
        let l = attn_loss(&mut g, n, mask, kind).unwrap();
        g.scalar(l)
    }

    fn mask_2x2(bits: [bool; 4]) -> InstanceMask {
        InstanceMask::from_bits(2, 2, bits.to_vec()).unwrap()
    }

    #[test]
    fn bce_worked_example() {
        let a = Tensor2D::new(2, 2, vec![0.9, 0.1, 0.2, 0.8]).unwrap();
        let l = value_loss(&a, &mask_2x2([true, false, false, true]), LossKind::Bce);
        assert!((l - 0.16425).abs() < 1e-5, "{l}");
        let exact = -(0.9f64.ln() * 2.0 + 0.8f64.ln() * 2.0) / 4.0;
        assert!((l - exact).abs() < 1e-15);
    }

    #[test]
    fn bce_of_half_is_ln2() {
        let a = Tensor2D::filled(3, 5, 0.5);
        let bits: Vec<bool> = (0..15).map(|i| i % 3 == 0).collect();
        let mask = InstanceMask::from_bits(3, 5, bits).unwrap();
        assert!((value_loss(&a, &mask, LossKind::Bce) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn losses_vanish_at_clamped_mask() {
        let bits: Vec<bool> = (0..16).map(|i| i % 5 == 1).collect();
        let mask = InstanceMask::from_bits(4, 4, bits).unwrap();
        let a = mask.to_tensor().map(|v| v.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS));
        for kind in LossKind::all() {
            let l = value_loss(&a, &mask, kind);
            assert!((0.0..1e-6).contains(&l), "{kind}: {l}");
        }
        assert!(value_loss(&a, &mask, LossKind::Bce) <= 2e-7);
    }

    #[test]
    fn fusion_examples() {
        let mut g = Graph::new();
        let a = g.constant(Tensor2D::new(1, 2, vec![0.5, 0.7]).unwrap());
        let b = g.constant(Tensor2D::new(1, 2, vec![0.4, 0.7]).unwrap());
        let sel = LayerSelection::try_from(vec![1, 2]).unwrap();
        let prod = fuse(&mut g, &[a, b], &sel, FusionMethod::Prod).unwrap();
        assert!((g.value(prod).get(0, 0) - 0.2).abs() < 1e-15);
        let add = fuse(&mut g, &[a, b], &sel, FusionMethod::Add).unwrap();
        assert_eq!(g.value(add).get(0, 1), 1.0 - 1e-7);
        let pool = fuse(&mut g, &[a, b], &sel, FusionMethod::Pool).unwrap();
        assert_eq!(g.value(pool).data(), &[0.5, 0.7]);
        let bad = LayerSelection::try_from(vec![3]).unwrap();
        assert!(fuse(&mut g, &[a, b], &bad, FusionMethod::Mean).is_err());
    }

    #[test]
    fn names_parse_back() {
        for f in FusionMethod::ALL {
            assert_eq!(f.name().parse::<FusionMethod>().unwrap(), f);
        }
        for k in LossKind::all() {
            assert_eq!(k.name().parse::<LossKind>().unwrap(), k);
        }
        assert!("sum".parse::<FusionMethod>().is_err());
        assert!(LossKind::Focal { alpha: 1.0, gamma: 2.0 }.validate().is_err());
    }

    fn tiny_trace(g: &mut Graph, heads: usize, seed: u64) -> (ForwardTrace, ModelConfig) {
        let cfg = ModelConfig {
            d: 8,
            n_layers: 2,
            n_heads: heads,
            ffn_mult: 2,
            vocab_size: 9,
            visual_feature_dim: 3,
            max_text_len: 5,
        };
        let mut rng = SeededRng::new(seed);
        let p = ModelParams::init(cfg, &mut rng).unwrap();
        let b = BoundParams::frozen(g, &p);
        let feats = Tensor2D::new(4, 3, (0..12).map(|_| rng.uniform_in(-2.0, 2.0)).collect()).unwrap();
        (forward(g, &b, &cfg, &[1, 2, 3, 4], &feats).unwrap(), cfg)
    }

    #[test]
    fn extraction_averages_heads_and_span() {
        let mut g = Graph::new();
        let (t, _) = tiny_trace(&mut g, 2, 1);
        let maps = extract_noun_attention(&mut g, &t, (1, 2), (2, 2)).unwrap();
        assert_eq!(maps.len(), 2);
        for (l, &m) in maps.iter().enumerate() {
            let v = g.value(m);
            assert_eq!(v.shape(), (2, 2));
            assert!((v.sum() - 1.0).abs() < 1e-9);
            for j in 0..4 {
                let mut want = 0.0;
                for &h in &t.attention[l] {
                    want += g.value(h).get(1, j) + g.value(h).get(2, j);
                }
                assert!((v.data()[j] - want / 4.0).abs() < 1e-15);
            }
        }
        assert!(extract_noun_attention(&mut g, &t, (2, 4), (2, 2)).is_err());
        assert!(extract_noun_attention(&mut g, &t, (0, 0), (1, 3)).is_err());
    }

    #[test]
    fn single_head_single_token_is_the_row() {
        let mut g = Graph::new();
        let (t, _) = tiny_trace(&mut g, 1, 2);
        let maps = extract_noun_attention(&mut g, &t, (3, 3), (2, 2)).unwrap();
        assert_eq!(g.value(maps[1]).data(), g.value(t.attention[1][0]).row(3));
    }

    #[test]
    fn zero_lambda_total_is_task() {
        let mut g = Graph::new();
        let (t, _) = tiny_trace(&mut g, 2, 3);
        let task = g.cross_entropy(t.logits, 1);
        let mask = InstanceMask::from_bits(2, 2, vec![true, false, false, false]).unwrap();
        let mut s = SwimSettings {
            selection: LayerSelection::default_for(2),
            fusion: FusionMethod::Mean,
            loss: LossKind::Bce,
            lambda: 0.0,
        };
        let r = swim_step_loss(&mut g, &t, (2, 2), (2, 2), &mask, &s, task).unwrap();
        assert_eq!(r.total, task);
        s.lambda = 1.0;
        let zero = g.constant(Tensor2D::scalar(0.0));
        let r = swim_step_loss(&mut g, &t, (2, 2), (2, 2), &mask, &s, zero).unwrap();
        assert_eq!(g.scalar(r.total), g.scalar(r.attn));
    }

    #[test]
    fn bce_is_minimized_at_mask() {
        let bits: Vec<bool> = (0..9).map(|i| i % 2 == 0).collect();
        let mask = InstanceMask::from_bits(3, 3, bits).unwrap();
        let best = mask.to_tensor().map(|v| v.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS));
        let base = value_loss(&best, &mask, LossKind::Bce);
        for k in 0..9 {
            let mut a = best.clone();
            let v = a.data()[k];
            a.data_mut()[k] = if v > 0.5 { 0.9 } else { 0.1 };
            assert!(value_loss(&a, &mask, LossKind::Bce) > base);
        }
    }

    proptest! {
        #[test]
        fn pool_mean_prod_ordering(vals in proptest::collection::vec(0.0f64..1.0, 3 * 6)) {
            let mut g = Graph::new();
            let maps: Vec<NodeId> = vals.chunks(6).map(|c| g.constant(Tensor2D::new(2, 3, c.to_vec()).unwrap())).collect();
            let sel = LayerSelection::try_from(vec![1, 2, 3]).unwrap();
            let pool = fuse(&mut g, &maps, &sel, FusionMethod::Pool).unwrap();
            let mean = fuse(&mut g, &maps, &sel, FusionMethod::Mean).unwrap();
            let prod = fuse(&mut g, &maps, &sel, FusionMethod::Prod).unwrap();
            for i in 0..6 {
                prop_assert!(g.value(pool).data()[i] >= g.value(mean).data()[i]);
                prop_assert!(g.value(mean).data()[i] >= g.value(prod).data()[i]);
            }
        }

        #[test]
        fn mean_of_copies_is_identity(vals in proptest::collection::vec(1e-6f64..0.999, 8), k in 1usize..5) {
            let mut g = Graph::new();
            let m = g.constant(Tensor2D::new(2, 4, vals.clone()).unwrap());
            let maps = vec![m; k];
            let sel = LayerSelection::try_from((1..=k).collect::<Vec<_>>()).unwrap();
            let f = fuse(&mut g, &maps, &sel, FusionMethod::Mean).unwrap();
            prop_assert_eq!(g.value(f).data(), &vals[..]);
        }

        #[test]
        fn losses_nonnegative(vals in proptest::collection::vec(1e-7f64..0.9999999, 9), bits in proptest::collection::vec(any::<bool>(), 9)) {
            let mask = InstanceMask::from_bits(3, 3, bits).unwrap();
            let a = Tensor2D::new(3, 3, vals).unwrap();
            for kind in LossKind::all() {
                prop_assert!(value_loss(&a, &mask, kind) >= 0.0);
            }
        }
    }
}

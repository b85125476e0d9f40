use crate::align::{extract_noun_attention, fuse, FusionMethod, LayerSelection};
use crate::error::{Error, Result};
use crate::model::{encode_input, forward, BoundParams, ModelParams};
use crate::numerics::{bilinear_resize, Graph, SeededRng, Tensor2D};
use crate::prompt::{perturb_synonyms, SynonymTable, Vocabulary};
use crate::scenes::{DatasetRecord, InstanceMask, ModelInput};

use super::report::{MetricReport, SampleMetrics, GP_K_LIST, GP_P_LIST};
use super::score::{auc, average_precision, gamepoint_k, gamepoint_p, nss, precision_at, PRECISION_THRESHOLD};

/// How attention is read out during evaluation.
#[derive(Clone, Debug)]
pub struct EvalConfig {
    pub selection: LayerSelection,
    pub fusion: FusionMethod,
    /// Swap each tagged noun for a random synonym before the forward pass.
    pub synonyms: Option<(SynonymTable, u64)>,
}

/// Fused noun attention at the scene's grid resolution. Only the
/// model-visible input is taken, so no mask can influence the map.
pub fn noun_attention_map(
    params: &ModelParams,
    input: ModelInput<'_>,
    vocab: &Vocabulary,
    selection: &LayerSelection,
    fusion: FusionMethod,
) -> Result<Tensor2D> {
    let enc = encode_input(input, vocab)?;
    let mut g = Graph::new();
    let bound = BoundParams::frozen(&mut g, params);
    let trace = forward(&mut g, &bound, params.config(), &enc.ids, &enc.features)?;
    let maps = extract_noun_attention(&mut g, &trace, enc.span, enc.grid)?;
    let fused = fuse(&mut g, &maps, selection, fusion)?;
    Ok(g.value(fused).clone())
}

fn score(id: u64, map: &Tensor2D, mask: &InstanceMask) -> Result<SampleMetrics> {
    let mut flags = Vec::new();
    let mut gp_p = [0.0; 3];
    for (slot, &p) in gp_p.iter_mut().zip(&GP_P_LIST) {
        *slot = gamepoint_p(map, mask, p)?;
    }
    let mut gp_k = [None; 5];
    for (slot, &k) in gp_k.iter_mut().zip(&GP_K_LIST) {
        if k <= map.len() {
            *slot = Some(gamepoint_k(map, mask, k)?);
        } else {
            flags.push(format!("k{k}_exceeds_pixels"));
        }
    }
    let mut soft = |r: Result<f64>, name: &str| match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::UndefinedAuc | Error::ZeroVariance | Error::EmptyMask)) => {
            flags.push(format!("{name}_{}", e.to_string().replace(' ', "_")));
            Ok(None)
        }
        Err(e) => Err(e),
    };
    let auc = soft(auc(map, mask), "auc")?;
    let nss = soft(nss(map, mask), "nss")?;
    let ap = soft(average_precision(map, mask), "ap")?;
    let precision = precision_at(map, mask, PRECISION_THRESHOLD)?;
    if precision.empty_prediction {
        flags.push("precision_no_prediction".into());
    }
    Ok(SampleMetrics {
        id,
        gp_p,
        gp_k,
        auc,
        nss,
        ap,
        precision: precision.value,
        flags,
    })
}

/// Scores every record's fused noun attention against its mask.
pub fn evaluate_dataset(
    params: &ModelParams,
    records: &[DatasetRecord],
    vocab: &Vocabulary,
    config: &EvalConfig,
) -> Result<MetricReport> {
    if records.is_empty() {
        return Err(Error::invalid("evaluation needs at least one record"));
    }
    let mut rng = config.synonyms.as_ref().map(|(_, seed)| SeededRng::new(*seed));
    let mut samples = Vec::with_capacity(records.len());
    for r in records {
        let prompt = match (&config.synonyms, rng.as_mut()) {
            (Some((table, _)), Some(rng)) => perturb_synonyms(&r.prompt.refined_human, table, rng)?.text,
            _ => r.prompt.refined_human.clone(),
        };
        let input = ModelInput {
            scene: &r.scene,
            refined_prompt: &prompt,
        };
        let map = noun_attention_map(params, input, vocab, &config.selection, config.fusion)?;
        let map = if map.shape() == r.mask.shape() {
            map
        } else {
            bilinear_resize(&map, r.mask.height(), r.mask.width())?
        };
        samples.push(score(r.id, &map, &r.mask)?);
    }
    MetricReport::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::scenes::{generate_dataset, GenConfig, FEATURE_DIM};

    fn setup() -> (ModelParams, Vec<DatasetRecord>, Vocabulary, EvalConfig) {
        let vocab = Vocabulary::standard();
        let data = generate_dataset(&GenConfig::default(), 4, 0, &vocab).unwrap();
        let cfg = ModelConfig {
            d: 8,
            n_layers: 2,
            n_heads: 2,
            ffn_mult: 2,
            vocab_size: vocab.len(),
            visual_feature_dim: FEATURE_DIM,
            max_text_len: 24,
        };
        let p = ModelParams::init(cfg, &mut SeededRng::new(0)).unwrap();
        let ec = EvalConfig {
            selection: LayerSelection::default_for(2),
            fusion: FusionMethod::Mean,
            synonyms: None,
        };
        (p, data, vocab, ec)
    }

    #[test]
    fn single_record_and_duplicates() {
        let (p, data, vocab, ec) = setup();
        let one = evaluate_dataset(&p, &data[..1], &vocab, &ec).unwrap();
        assert_eq!(one.mean("gp_p5"), Some(one.samples[0].gp_p[1]));
        let twice = evaluate_dataset(&p, &[data[0].clone(), data[0].clone()], &vocab, &ec).unwrap();
        assert_eq!(twice.means, one.means);
        assert!(evaluate_dataset(&p, &[], &vocab, &ec).is_err());
    }

    #[test]
    fn synonym_evaluation_is_deterministic() {
        let (p, data, vocab, mut ec) = setup();
        ec.synonyms = Some((SynonymTable::standard(), 5));
        let a = evaluate_dataset(&p, &data, &vocab, &ec).unwrap();
        let b = evaluate_dataset(&p, &data, &vocab, &ec).unwrap();
        assert_eq!(a, b);
        assert!(a.means.iter().all(|m| m.is_some_and(f64::is_finite)));
    }
}

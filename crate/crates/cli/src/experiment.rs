//! Ablation studies: train and evaluate each variant under several seeds.

use std::fmt::Write as _;

use swim_core::align::{FusionMethod, LossKind};
use swim_core::metrics::{evaluate_dataset, EvalConfig, MetricReport};
use swim_core::model::ModelParams;
use swim_core::prompt::Vocabulary;
use swim_core::scenes::DatasetRecord;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::train::train;

pub const DEFAULT_SEEDS: [u64; 3] = [0, 1, 2];

/// Metric columns carried into sweep CSVs, in order.
pub const SWEEP_METRICS: [&str; 12] = [
    "gp_p1", "gp_p5", "gp_p10", "gp_k1", "gp_k5", "gp_k10", "gp_k50", "gp_k100", "auc", "nss", "ap", "precision",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Study {
    Layers,
    Fusion,
    Loss,
    DataScale,
}

impl std::str::FromStr for Study {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "layers" => Ok(Self::Layers),
            "fusion" => Ok(Self::Fusion),
            "loss" => Ok(Self::Loss),
            "datascale" => Ok(Self::DataScale),
            other => Err(CliError::user(format!(
                "unknown study {other:?} (layers, fusion, loss, datascale)"
            ))),
        }
    }
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Self::Layers => "layers",
            Self::Fusion => "fusion",
            Self::Loss => "loss",
            Self::DataScale => "datascale",
        }
    }
}

/// One configuration of a study. `train_size` limits the training set to
/// its first records.
#[derive(Clone, Debug)]
pub struct Variant {
    pub label: String,
    pub config: RunConfig,
    pub train_size: Option<usize>,
}

/// Default layer sets: each single layer, the top half, then all layers.
pub fn layer_variants(n_layers: usize) -> Vec<String> {
    let mut v: Vec<String> = (1..=n_layers).map(|l| l.to_string()).collect();
    if n_layers > 2 {
        v.push(format!("even:{}", n_layers / 2));
    }
    v.push(format!("even:{n_layers}"));
    v.dedup();
    v
}

pub fn variants(study: Study, base: &RunConfig, sizes: &[usize]) -> CliResult<Vec<Variant>> {
    let with = |label: String, config: RunConfig| Variant {
        label,
        config,
        train_size: None,
    };
    Ok(match study {
        Study::Layers => layer_variants(base.model.n_layers)
            .into_iter()
            .map(|s| {
                with(
                    s.clone(),
                    RunConfig {
                        select: s,
                        ..base.clone()
                    },
                )
            })
            .collect(),
        Study::Fusion => FusionMethod::ALL
            .into_iter()
            .map(|f| with(f.name().into(), RunConfig { fusion: f, ..base.clone() }))
            .collect(),
        Study::Loss => LossKind::all()
            .into_iter()
            .map(|k| {
                with(
                    k.name().into(),
                    RunConfig {
                        loss: k.name().into(),
                        ..base.clone()
                    },
                )
            })
            .collect(),
        Study::DataScale => {
            if sizes.is_empty() {
                return Err(CliError::user("datascale needs at least one size"));
            }
            sizes
                .iter()
                .map(|&n| Variant {
                    label: n.to_string(),
                    config: base.clone(),
                    train_size: Some(n),
                })
                .collect()
        }
    })
}

/// A trained model with its evaluation.
pub struct RunOutcome {
    pub params: ModelParams,
    pub report: MetricReport,
    pub task_loss: f64,
    pub attn_loss: f64,
}

/// Trains one run and scores it on `eval` with its own readout settings.
pub fn run_once(
    config: &RunConfig,
    train_set: &[DatasetRecord],
    eval: &[DatasetRecord],
    vocab: &Vocabulary,
) -> CliResult<RunOutcome> {
    let trained = train(config, train_set, None, vocab)?;
    let (selection, _) = config.selection()?;
    let report = evaluate_dataset(
        &trained.params,
        eval,
        vocab,
        &EvalConfig {
            selection,
            fusion: config.fusion,
            synonyms: None,
        },
    )?;
    let last = trained.log.last().cloned();
    Ok(RunOutcome {
        params: trained.params,
        report,
        task_loss: last.as_ref().map_or(f64::NAN, |r| r.task_loss),
        attn_loss: last.as_ref().map_or(f64::NAN, |r| r.attn_loss),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub variant: String,
    /// `None` for the per-variant mean row.
    pub seed: Option<u64>,
    pub metrics: Vec<Option<f64>>,
    pub task_loss: f64,
    pub attn_loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub study: Study,
    pub rows: Vec<SweepRow>,
}

fn mean_of(vals: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = vals.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl Sweep {
    pub fn to_csv(&self) -> String {
        let mut out = format!("study,variant,seed,{},task_loss,attn_loss\n", SWEEP_METRICS.join(","));
        for r in &self.rows {
            let seed = r.seed.map_or("mean".to_string(), |s| s.to_string());
            let m: Vec<String> = r.metrics.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()).collect();
            writeln!(
                out,
                "{},{},{seed},{},{},{}",
                self.study.name(),
                r.variant,
                m.join(","),
                r.task_loss,
                r.attn_loss
            )
            .expect("string write");
        }
        out
    }

    /// Mean row of a variant.
    pub fn mean(&self, variant: &str, metric: &str) -> Option<f64> {
        let i = SWEEP_METRICS.iter().position(|m| *m == metric)?;
        self.rows
            .iter()
            .find(|r| r.variant == variant && r.seed.is_none())
            .and_then(|r| r.metrics[i])
    }

    pub fn value(&self, variant: &str, seed: u64, metric: &str) -> Option<f64> {
        let i = SWEEP_METRICS.iter().position(|m| *m == metric)?;
        self.rows
            .iter()
            .find(|r| r.variant == variant && r.seed == Some(seed))
            .and_then(|r| r.metrics[i])
    }
}

/// Runs every (variant, seed) pair. Rows come out variant by variant in
/// study order with seeds ascending, and all mean rows follow.
pub fn run_study(
    study: Study,
    base: &RunConfig,
    sizes: &[usize],
    seeds: &[u64],
    train_set: &[DatasetRecord],
    eval: &[DatasetRecord],
    vocab: &Vocabulary,
) -> CliResult<Sweep> {
    if seeds.is_empty() {
        return Err(CliError::user("no seeds given"));
    }
    let mut seeds = seeds.to_vec();
    seeds.sort_unstable();
    seeds.dedup();
    let list = variants(study, base, sizes)?;
    let mut rows = Vec::new();
    let mut means = Vec::new();
    for v in &list {
        let subset = match v.train_size {
            Some(n) if n > train_set.len() => {
                return Err(CliError::user(format!(
                    "size {n} exceeds the {} training records",
                    train_set.len()
                )))
            }
            Some(n) => &train_set[..n],
            None => train_set,
        };
        let mut runs = Vec::new();
        for &seed in &seeds {
            let cfg = RunConfig {
                seed: Some(seed),
                ..v.config.clone()
            };
            log::info!("{} {} seed {seed}", study.name(), v.label);
            let run = run_once(&cfg, subset, eval, vocab)?;
            let metrics = SWEEP_METRICS.iter().map(|m| run.report.mean(m)).collect();
            runs.push(SweepRow {
                variant: v.label.clone(),
                seed: Some(seed),
                metrics,
                task_loss: run.task_loss,
                attn_loss: run.attn_loss,
            });
        }
        let metrics = (0..SWEEP_METRICS.len())
            .map(|i| mean_of(runs.iter().map(|r| r.metrics[i])))
            .collect();
        means.push(SweepRow {
            variant: v.label.clone(),
            seed: None,
            metrics,
            task_loss: runs.iter().map(|r| r.task_loss).sum::<f64>() / runs.len() as f64,
            attn_loss: runs.iter().map(|r| r.attn_loss).sum::<f64>() / runs.len() as f64,
        });
        rows.extend(runs);
    }
    rows.extend(means);
    Ok(Sweep { study, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_enumeration() {
        let base = RunConfig::default();
        assert_eq!(variants(Study::Fusion, &base, &[]).unwrap().len(), 4);
        let loss: Vec<String> = variants(Study::Loss, &base, &[]).unwrap().into_iter().map(|v| v.label).collect();
        assert_eq!(loss, ["bce", "dice", "focal", "miou"]);
        assert_eq!(variants(Study::DataScale, &base, &[100, 300, 1000]).unwrap().len(), 3);
        assert_eq!(layer_variants(4), ["1", "2", "3", "4", "even:2", "even:4"]);
        assert!("depth".parse::<Study>().is_err());
    }
}

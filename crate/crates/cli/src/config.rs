//! Run configuration: JSON file plus command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use swim_core::align::{FusionMethod, LayerSelection, LossKind, SwimSettings};
use swim_core::model::ModelConfig;
use swim_core::prompt::Vocabulary;
use swim_core::scenes::FEATURE_DIM;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub d: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub ffn_mult: usize,
    pub max_text_len: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            d: 32,
            n_layers: 4,
            n_heads: 2,
            ffn_mult: 4,
            max_text_len: 24,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimSection {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub steps: usize,
    pub batch_size: usize,
}

impl Default for OptimSection {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            steps: 1500,
            batch_size: 16,
        }
    }
}

/// Everything one training run needs. Missing JSON keys take the defaults
/// below; the seed has no default and must be given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train_data: Option<PathBuf>,
    pub eval_data: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub model_out: Option<PathBuf>,
    pub log_out: Option<PathBuf>,
    pub model: ModelSection,
    pub optim: OptimSection,
    pub lambda: f64,
    pub select: String,
    pub fusion: FusionMethod,
    pub loss: String,
    pub focal_alpha: f64,
    pub focal_gamma: f64,
    pub seed: Option<u64>,
    pub log_every: usize,
    /// Evaluate GamePoint@P-5 on the eval set every this many steps (0: only
    /// at the end, when an eval set is given).
    pub eval_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train_data: None,
            eval_data: None,
            vocab: None,
            model_out: None,
            log_out: None,
            model: ModelSection::default(),
            optim: OptimSection::default(),
            lambda: 1.0,
            select: "even:6".into(),
            fusion: FusionMethod::Mean,
            loss: "bce".into(),
            focal_alpha: swim_core::align::DEFAULT_FOCAL_ALPHA,
            focal_gamma: swim_core::align::DEFAULT_FOCAL_GAMMA,
            seed: None,
            log_every: 50,
            eval_every: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::user(format!("{}: {e}", path.display())))
    }

    pub fn seed(&self) -> CliResult<u64> {
        self.seed.ok_or_else(|| CliError::user("a seed is required (--seed or \"seed\" in the config)"))
    }

    pub fn model_config(&self, vocab: &Vocabulary) -> ModelConfig {
        ModelConfig {
            d: self.model.d,
            n_layers: self.model.n_layers,
            n_heads: self.model.n_heads,
            ffn_mult: self.model.ffn_mult,
            vocab_size: vocab.len(),
            visual_feature_dim: FEATURE_DIM,
            max_text_len: self.model.max_text_len,
        }
    }

    pub fn loss_kind(&self) -> CliResult<LossKind> {
        let kind = match self.loss.parse::<LossKind>()? {
            LossKind::Focal { .. } => LossKind::Focal {
                alpha: self.focal_alpha,
                gamma: self.focal_gamma,
            },
            other => other,
        };
        kind.validate()?;
        Ok(kind)
    }

    /// Resolves the layer selection against the model depth. A clamped
    /// `even:k` comes back with its warning.
    pub fn selection(&self) -> CliResult<(LayerSelection, Option<String>)> {
        Ok(LayerSelection::parse(&self.select, self.model.n_layers)?)
    }

    pub fn swim_settings(&self) -> CliResult<(SwimSettings, Option<String>)> {
        let (selection, warning) = self.selection()?;
        Ok((
            SwimSettings {
                selection,
                fusion: self.fusion,
                loss: self.loss_kind()?,
                lambda: self.lambda,
            },
            warning,
        ))
    }

    // negated comparisons so that NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> CliResult<()> {
        let o = &self.optim;
        if !(o.lr > 0.0) || !(0.0..1.0).contains(&o.beta1) || !(0.0..1.0).contains(&o.beta2) || !(o.eps > 0.0) {
            return Err(CliError::user("optimizer needs lr > 0, beta1/beta2 in [0,1), eps > 0"));
        }
        if o.batch_size == 0 {
            return Err(CliError::user("batch_size must be at least 1"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(CliError::user("lambda must be a finite value >= 0"));
        }
        self.model_config(&Vocabulary::standard()).validate()?;
        self.swim_settings()?;
        self.seed()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"seed": 3, "lambda": 0.5, "model": {"d": 16}}"#).unwrap();
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.model.d, 16);
        assert_eq!(c.model.n_layers, 4);
        assert_eq!(c.optim.batch_size, 16);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_and_missing_seed_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 3}"#).is_err());
        assert!(RunConfig::default().validate().is_err());
    }

    #[test]
    fn focal_parameters_flow_through() {
        let c = RunConfig {
            loss: "focal".into(),
            focal_gamma: 1.0,
            ..RunConfig::default()
        };
        assert_eq!(c.loss_kind().unwrap(), LossKind::Focal { alpha: 0.25, gamma: 1.0 });
    }
}

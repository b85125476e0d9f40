use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered set of distinct 1-based layer indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct LayerSelection(Vec<usize>);

impl LayerSelection {
    /// Explicit layers, validated against `n_layers`.
    pub fn explicit(layers: Vec<usize>, n_layers: usize) -> Result<Self> {
        let s = Self::try_from(layers)?;
        if let Some(bad) = s.0.iter().find(|&&l| l > n_layers) {
            return Err(Error::Config(format!("layer {bad} exceeds model depth {n_layers}")));
        }
        Ok(s)
    }

    /// `k` indices spread over `[2, n_layers]` with step `floor((n-2)/(k-1))`,
    /// so 28 layers and k = 6 give 2, 7, 12, 17, 22, 27.
    ///
    /// When the model is too shallow for `k` layers starting at 2, the range
    /// widens to start at 1 and `k` is clamped to `n_layers`. The second value
    /// carries a warning whenever the request was changed.
    pub fn even(k: usize, n_layers: usize) -> Result<(Self, Option<String>)> {
        if k == 0 || n_layers == 0 {
            return Err(Error::Config("even:k needs k >= 1 and at least one layer".into()));
        }
        let (start, k_eff) = if k < n_layers { (2, k) } else { (1, k.min(n_layers)) };
        let span = n_layers - start;
        let step = if k_eff > 1 { span / (k_eff - 1) } else { 0 };
        let layers = (0..k_eff).map(|i| start + i * step).collect();
        let warning = (k_eff != k).then(|| format!("even:{k} clamped to even:{k_eff} for a {n_layers}-layer model"));
        Ok((Self(layers), warning))
    }

    /// Default choice: `even:min(6, n_layers)`.
    pub fn default_for(n_layers: usize) -> Self {
        Self::even(6.min(n_layers.max(1)), n_layers.max(1)).expect("valid").0
    }

    /// Parses `even:k` or a comma-separated list such as `1,3,4`.
    pub fn parse(spec: &str, n_layers: usize) -> Result<(Self, Option<String>)> {
        let spec = spec.trim();
        if let Some(k) = spec.strip_prefix("even:") {
            let k = k
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad layer selection {spec:?}")))?;
            return Self::even(k, n_layers);
        }
        let layers = spec
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Config(format!("bad layer selection {spec:?}")))?;
        Ok((Self::explicit(layers, n_layers)?, None))
    }

    pub fn layers(&self) -> &[usize] {
        &self.0
    }

    pub fn max_layer(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

impl TryFrom<Vec<usize>> for LayerSelection {
    type Error = Error;

    fn try_from(layers: Vec<usize>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("empty layer selection".into()));
        }
        if layers.contains(&0) {
            return Err(Error::Config("layer indices are 1-based".into()));
        }
        let mut seen = layers.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != layers.len() {
            return Err(Error::Config("duplicate layer in selection".into()));
        }
        Ok(Self(layers))
    }
}

impl From<LayerSelection> for Vec<usize> {
    fn from(s: LayerSelection) -> Self {
        s.0
    }
}

impl fmt::Display for LayerSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

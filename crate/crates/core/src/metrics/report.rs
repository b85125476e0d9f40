use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Percentages reported as GamePoint@P.
pub const GP_P_LIST: [f64; 3] = [1.0, 5.0, 10.0];
/// Counts reported as GamePoint@K.
pub const GP_K_LIST: [usize; 5] = [1, 5, 10, 50, 100];

pub const CSV_HEADER: &str =
    "sample,id,gp_p1,gp_p5,gp_p10,gp_k1,gp_k5,gp_k10,gp_k50,gp_k100,auc,nss,ap,precision,flags";

/// Metrics of one record. `None` marks a value excluded as degenerate; the
/// reason is listed in `flags`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMetrics {
    pub id: u64,
    pub gp_p: [f64; 3],
    pub gp_k: [Option<f64>; 5],
    pub auc: Option<f64>,
    pub nss: Option<f64>,
    pub ap: Option<f64>,
    pub precision: f64,
    pub flags: Vec<String>,
}

impl SampleMetrics {
    fn columns(&self) -> Vec<Option<f64>> {
        let mut v: Vec<Option<f64>> = self.gp_p.iter().map(|&x| Some(x)).collect();
        v.extend(self.gp_k);
        v.extend([self.auc, self.nss, self.ap, Some(self.precision)]);
        v
    }
}

/// Per-sample metrics plus their means. Each mean averages the samples where
/// the metric is defined; `excluded` counts the others per column.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub samples: Vec<SampleMetrics>,
    pub means: Vec<Option<f64>>,
    pub excluded: Vec<usize>,
}

const METRIC_NAMES: [&str; 12] = [
    "gp_p1", "gp_p5", "gp_p10", "gp_k1", "gp_k5", "gp_k10", "gp_k50", "gp_k100", "auc", "nss", "ap", "precision",
];

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricReport {
    pub fn new(samples: Vec<SampleMetrics>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("metric report needs at least one sample"));
        }
        let cols: Vec<Vec<Option<f64>>> = samples.iter().map(SampleMetrics::columns).collect();
        let mut means = Vec::with_capacity(METRIC_NAMES.len());
        let mut excluded = Vec::with_capacity(METRIC_NAMES.len());
        for c in 0..METRIC_NAMES.len() {
            let defined: Vec<f64> = cols.iter().filter_map(|r| r[c]).collect();
            excluded.push(cols.len() - defined.len());
            means.push((!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64));
        }
        Ok(Self {
            samples,
            means,
            excluded,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of a column by CSV name, e.g. `"gp_p5"`.
    pub fn mean(&self, column: &str) -> Option<f64> {
        let i = METRIC_NAMES.iter().position(|n| *n == column)?;
        self.means[i]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for (i, s) in self.samples.iter().enumerate() {
            let vals: Vec<String> = s.columns().into_iter().map(fmt_opt).collect();
            writeln!(out, "{i},{},{},{}", s.id, vals.join(","), s.flags.join(";")).expect("string write");
        }
        let vals: Vec<String> = self.means.iter().copied().map(fmt_opt).collect();
        let notes: Vec<String> = METRIC_NAMES
            .iter()
            .zip(&self.excluded)
            .filter(|(_, &n)| n > 0)
            .map(|(name, n)| format!("excluded_{name}={n}"))
            .collect();
        writeln!(out, "mean,,{},{}", vals.join(","), notes.join(";")).expect("string write");
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

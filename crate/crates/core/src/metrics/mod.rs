//! Localization metrics of an attention map against an instance mask, and
//! dataset-level evaluation.

mod evaluate;
mod report;
mod score;

pub use evaluate::{evaluate_dataset, noun_attention_map, EvalConfig};
pub use report::{MetricReport, SampleMetrics, CSV_HEADER, GP_K_LIST, GP_P_LIST};
pub use score::{auc, average_precision, gamepoint_k, gamepoint_p, nss, precision_at, ranking, top_count, top_perc, Precision, PRECISION_THRESHOLD};

//! Adam training of the model on task loss plus weighted attention loss.

use std::fmt::Write as _;

use log::{info, warn};
use swim_core::align::{swim_step_loss, SwimSettings};
use swim_core::metrics::{evaluate_dataset, EvalConfig};
use swim_core::model::{encode_input, forward, task_loss, BoundParams, EncodedInput, ModelParams};
use swim_core::prompt::Vocabulary;
use swim_core::scenes::{DatasetRecord, InstanceMask};
use swim_core::{Graph, SeededRng, Tensor2D};

use crate::config::{OptimSection, RunConfig};
use crate::error::{CliError, CliResult};

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    cfg: OptimSection,
    m: Vec<Tensor2D>,
    v: Vec<Tensor2D>,
    t: i32,
}

impl Adam {
    pub fn new(cfg: OptimSection, params: &ModelParams) -> Self {
        let zeros: Vec<Tensor2D> = params.tensors().iter().map(|t| Tensor2D::zeros(t.rows(), t.cols())).collect();
        Self {
            cfg,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &[Tensor2D]) {
        self.t += 1;
        let OptimSection { lr, beta1, beta2, eps, .. } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for (((p, g), m), v) in params.tensors_mut().iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            let (p, g, m, v) = (p.data_mut(), g.data(), m.data_mut(), v.data_mut());
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
        }
    }
}

/// One logged interval.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub step: usize,
    pub task_loss: f64,
    pub attn_loss: f64,
    pub total_loss: f64,
    pub eval_gp_p5: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,task_loss,attn_loss,total_loss,eval_gp_p5\n");
        for r in &self.rows {
            let gp = r.eval_gp_p5.map(|v| v.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{gp}", r.step, r.task_loss, r.attn_loss, r.total_loss).expect("string write");
        }
        out
    }

    pub fn last(&self) -> Option<&LogRow> {
        self.rows.last()
    }
}

struct Sample {
    enc: EncodedInput,
    answer: usize,
    mask: InstanceMask,
}

fn prepare(records: &[DatasetRecord], vocab: &Vocabulary) -> CliResult<Vec<Sample>> {
    records
        .iter()
        .map(|r| {
            let enc = encode_input(r.input(), vocab).map_err(|e| CliError::user(format!("record {}: {e}", r.id)))?;
            let answer = vocab.require(&r.answer).map_err(|e| CliError::user(format!("record {}: {e}", r.id)))?;
            Ok(Sample {
                enc,
                answer,
                mask: r.mask.clone(),
            })
        })
        .collect()
}

/// Output of [`train`].
pub struct Trained {
    pub params: ModelParams,
    pub log: TrainLog,
    /// Warning about a clamped layer selection, if any.
    pub warning: Option<String>,
}

fn eval_gp5(params: &ModelParams, records: &[DatasetRecord], vocab: &Vocabulary, settings: &SwimSettings) -> CliResult<f64> {
    let cfg = EvalConfig {
        selection: settings.selection.clone(),
        fusion: settings.fusion,
        synonyms: None,
    };
    let report = evaluate_dataset(params, records, vocab, &cfg)?;
    Ok(report.mean("gp_p5").unwrap_or(0.0))
}

/// Trains from scratch. Initialization draws from one fork of the seed
/// stream and batch order from another, so two runs that differ only in
/// lambda start from identical weights and see identical batches.
pub fn train(
    config: &RunConfig,
    records: &[DatasetRecord],
    eval: Option<&[DatasetRecord]>,
    vocab: &Vocabulary,
) -> CliResult<Trained> {
    config.validate()?;
    if records.is_empty() {
        return Err(CliError::user("training set is empty"));
    }
    let (settings, warning) = config.swim_settings()?;
    if let Some(w) = &warning {
        warn!("{w}");
    }
    let model_cfg = config.model_config(vocab);
    let mut root = SeededRng::new(config.seed()?);
    let mut init_rng = root.fork();
    let mut order_rng = root.fork();
    let mut params = ModelParams::init(model_cfg, &mut init_rng)?;
    let samples = prepare(records, vocab)?;
    if let Some(s) = samples.iter().find(|s| s.enc.ids.len() > model_cfg.max_text_len) {
        return Err(CliError::user(format!(
            "a prompt has {} tokens, above max_text_len {}",
            s.enc.ids.len(),
            model_cfg.max_text_len
        )));
    }
    let mut adam = Adam::new(config.optim.clone(), &params);
    let batch = config.optim.batch_size;

    let mut order: Vec<usize> = Vec::new();
    let mut cursor = 0;
    let mut log = TrainLog::default();
    let (mut acc_task, mut acc_attn, mut acc_total, mut acc_n) = (0.0, 0.0, 0.0, 0usize);
    for step in 1..=config.optim.steps {
        let mut grads: Vec<Tensor2D> = params.tensors().iter().map(|t| Tensor2D::zeros(t.rows(), t.cols())).collect();
        for _ in 0..batch {
            if cursor == order.len() {
                order = (0..samples.len()).collect();
                order_rng.shuffle(&mut order);
                cursor = 0;
            }
            let s = &samples[order[cursor]];
            cursor += 1;

            let mut g = Graph::new();
            let bound = BoundParams::trainable(&mut g, &params);
            let trace = forward(&mut g, &bound, &model_cfg, &s.enc.ids, &s.enc.features)?;
            let task = task_loss(&mut g, trace.logits, s.answer)?;
            let loss = swim_step_loss(&mut g, &trace, s.enc.span, s.enc.grid, &s.mask, &settings, task)?;
            let (t, a, total) = (g.scalar(task), g.scalar(loss.attn), g.scalar(loss.total));
            if !total.is_finite() {
                return Err(CliError::Internal(format!("non-finite loss at step {step}")));
            }
            g.backward(loss.total)?;
            for (acc, gr) in grads.iter_mut().zip(bound.gradients(&g)) {
                acc.add_assign(&gr);
            }
            acc_task += t;
            acc_attn += a;
            acc_total += total;
            acc_n += 1;
        }
        let inv = 1.0 / batch as f64;
        for gr in &mut grads {
            gr.data_mut().iter_mut().for_each(|x| *x *= inv);
        }
        adam.step(&mut params, &grads);
        if !params.is_finite() {
            return Err(CliError::Internal(format!("parameters became non-finite at step {step}")));
        }

        let last = step == config.optim.steps;
        let wants_eval = last || (config.eval_every > 0 && step % config.eval_every == 0);
        if step % config.log_every.max(1) == 0 || wants_eval {
            let n = acc_n as f64;
            let eval_gp_p5 = match eval {
                Some(e) if wants_eval && !e.is_empty() => Some(eval_gp5(&params, e, vocab, &settings)?),
                _ => None,
            };
            let row = LogRow {
                step,
                task_loss: acc_task / n,
                attn_loss: acc_attn / n,
                total_loss: acc_total / n,
                eval_gp_p5,
            };
            info!(
                "step {step}: task {:.4} attn {:.4} total {:.4}{}",
                row.task_loss,
                row.attn_loss,
                row.total_loss,
                eval_gp_p5.map(|v| format!(" eval gp@p5 {v:.4}")).unwrap_or_default()
            );
            log.rows.push(row);
            (acc_task, acc_attn, acc_total, acc_n) = (0.0, 0.0, 0.0, 0);
        }
    }
    Ok(Trained { params, log, warning })
}

//! Subcommand definitions and their implementations.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use swim_core::align::{gradcheck_suite, model_gradcheck_suite, FusionMethod, LayerSelection};
use swim_core::metrics::{evaluate_dataset, EvalConfig};
use swim_core::model::{load_params, save_params};
use swim_core::numerics::gradcheck::numerics_suite;
use swim_core::prompt::{SynonymTable, Vocabulary};
use swim_core::scenes::{generate_dataset, read_dataset, write_dataset, DatasetRecord, GenConfig};
use swim_core::SeededRng;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::experiment::{run_study, Study, DEFAULT_SEEDS};
use crate::plot::{bar_chart, line_chart, Table};
use crate::train::train;

#[derive(Debug, Parser)]
#[command(name = "swim", version, about = "Mask-supervised cross-attention on synthetic grounding scenes")]
pub struct Cli {
    /// Only print warnings and errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic JSONL dataset.
    GenData(GenDataArgs),
    /// Train a model, optionally with attention supervision.
    Train(TrainArgs),
    /// Score a trained model's noun attention against the masks.
    Eval(EvalArgs),
    /// Run an ablation study over seeds and write a sweep CSV.
    Ablate(AblateArgs),
    /// Run the finite-difference gradient suites.
    Gradcheck(GradcheckArgs),
    /// Draw a CSV as an SVG chart.
    Plot(PlotArgs),
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<T>().map_err(|_| format!("bad list item {t:?}")))
        .collect()
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad grid {s:?}"));
    match parts.as_slice() {
        [n] => Ok((num(n)?, num(n)?)),
        [h, w] => Ok((num(h)?, num(w)?)),
        _ => Err(format!("bad grid {s:?} (use N or HxW)")),
    }
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let v: Vec<usize> = parse_list(s)?;
    match v.as_slice() {
        [n] => Ok((*n, *n)),
        [a, b] if a <= b => Ok((*a, *b)),
        _ => Err(format!("bad range {s:?} (use MIN,MAX)")),
    }
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 800)]
    pub num: usize,
    /// Grid size, `N` or `HxW`.
    #[arg(long, value_parser = parse_grid, default_value = "12")]
    pub grid: (usize, usize),
    /// Object count range `MIN,MAX`.
    #[arg(long, value_parser = parse_range, default_value = "3,5")]
    pub objects: (usize, usize),
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub synonym_rate: Option<f64>,
    #[arg(long)]
    pub distractor_share: Option<f64>,
    /// Also write an evaluation set drawn from a stream derived from the seed.
    #[arg(long, requires = "eval_num")]
    pub eval_out: Option<PathBuf>,
    #[arg(long)]
    pub eval_num: Option<usize>,
    /// Write the vocabulary as JSON.
    #[arg(long)]
    pub vocab_out: Option<PathBuf>,
}

/// Training flags; any flag given overrides the `--config` file.
#[derive(Debug, Args, Default)]
pub struct RunFlags {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub eval: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub ffn_mult: Option<usize>,
    #[arg(long)]
    pub max_text_len: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub adam_eps: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long = "lambda")]
    pub lambda: Option<f64>,
    /// Layer selection: `even:k` or a list such as `1,3`.
    #[arg(long)]
    pub select: Option<String>,
    #[arg(long)]
    pub fusion: Option<FusionMethod>,
    /// bce, dice, focal or miou.
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long)]
    pub focal_alpha: Option<f64>,
    #[arg(long)]
    pub focal_gamma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub log_every: Option<usize>,
    #[arg(long)]
    pub eval_every: Option<usize>,
}

impl RunFlags {
    /// File config (or defaults) with every given flag applied on top.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:ident => $($field:ident).+) => {
                if let Some(v) = &self.$flag {
                    c.$($field).+ = v.clone().into();
                }
            };
        }
        set!(train => train_data);
        set!(eval => eval_data);
        set!(vocab => vocab);
        set!(d => model.d);
        set!(layers => model.n_layers);
        set!(heads => model.n_heads);
        set!(ffn_mult => model.ffn_mult);
        set!(max_text_len => model.max_text_len);
        set!(lr => optim.lr);
        set!(beta1 => optim.beta1);
        set!(beta2 => optim.beta2);
        set!(adam_eps => optim.eps);
        set!(steps => optim.steps);
        set!(batch => optim.batch_size);
        set!(lambda => lambda);
        set!(select => select);
        set!(fusion => fusion);
        set!(loss => loss);
        set!(focal_alpha => focal_alpha);
        set!(focal_gamma => focal_gamma);
        set!(seed => seed);
        set!(log_every => log_every);
        set!(eval_every => eval_every);
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunFlags,
    /// Output parameter file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output training log CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Metric report CSV; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value = "even:6")]
    pub select: String,
    #[arg(long, default_value = "mean")]
    pub fusion: FusionMethod,
    /// Swap every tagged noun for a random synonym first.
    #[arg(long)]
    pub synonyms: bool,
    /// Seed of the synonym draws.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// layers, fusion, loss or datascale.
    #[arg(long)]
    pub study: String,
    #[command(flatten)]
    pub run: RunFlags,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub seeds: Vec<u64>,
    /// Training-set sizes for the datascale study.
    #[arg(long, value_delimiter = ',', default_value = "100,300,1000")]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Negate the attention-loss gradient to confirm the checker catches it.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// x column of a line chart.
    #[arg(long)]
    pub x: Option<String>,
    /// y columns of a line chart.
    #[arg(long, value_delimiter = ',')]
    pub y: Option<Vec<String>>,
    /// Columns to draw as grouped bars.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["x", "y"])]
    pub bars: Option<Vec<String>>,
    #[arg(long)]
    pub title: Option<String>,
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::user(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::user(format!("{}: {e}", path.display())))
}

fn load_vocab(path: Option<&Path>) -> CliResult<Vocabulary> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::user(format!("{}: {e}", p.display())))?;
            Vocabulary::from_json(&text).map_err(|e| CliError::user(format!("{}: {e}", p.display())))
        }
        None => Ok(Vocabulary::standard()),
    }
}

fn load_data(path: Option<&Path>, what: &str) -> CliResult<Vec<DatasetRecord>> {
    let p = path.ok_or_else(|| CliError::user(format!("no {what} dataset given")))?;
    Ok(read_dataset(p)?)
}

/// Seed of the evaluation split written alongside a training split.
pub fn eval_seed(seed: u64) -> u64 {
    SeededRng::new(seed).next_u64()
}

pub fn gen_data(a: &GenDataArgs) -> CliResult<()> {
    let mut config = GenConfig {
        grid_h: a.grid.0,
        grid_w: a.grid.1,
        min_objects: a.objects.0,
        max_objects: a.objects.1,
        ..GenConfig::default()
    };
    if let Some(r) = a.synonym_rate {
        config.synonym_rate = r;
    }
    if let Some(s) = a.distractor_share {
        config.distractor_share = s;
    }
    let vocab = Vocabulary::standard();
    let mut splits = vec![(&a.out, a.num, a.seed)];
    if let (Some(p), Some(n)) = (&a.eval_out, a.eval_num) {
        splits.push((p, n, eval_seed(a.seed)));
    }
    for (path, n, seed) in splits {
        if n == 0 {
            warn!("--num 0: writing an empty dataset to {}", path.display());
        }
        let records = generate_dataset(&config, n, seed, &vocab)?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::user(format!("{}: {e}", dir.display())))?;
        }
        write_dataset(&records, path)?;
        println!("wrote {} records to {}", records.len(), path.display());
    }
    if let Some(p) = &a.vocab_out {
        write(p, &vocab.to_json())?;
    }
    Ok(())
}

pub fn train_cmd(a: &TrainArgs) -> CliResult<()> {
    let mut config = a.run.resolve()?;
    if a.out.is_some() {
        config.model_out = a.out.clone();
    }
    if a.log.is_some() {
        config.log_out = a.log.clone();
    }
    config.validate()?;
    let out = config
        .model_out
        .clone()
        .ok_or_else(|| CliError::user("no model output path (--out or \"model_out\")"))?;
    let vocab = load_vocab(config.vocab.as_deref())?;
    let records = load_data(config.train_data.as_deref(), "training")?;
    let eval = match &config.eval_data {
        Some(p) => Some(read_dataset(p)?),
        None => None,
    };
    let trained = train(&config, &records, eval.as_deref(), &vocab)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::user(format!("{}: {e}", dir.display())))?;
    }
    save_params(&trained.params, &out)?;
    if let Some(p) = &config.log_out {
        write(p, &trained.log.to_csv())?;
    }
    if let Some(last) = trained.log.last() {
        println!(
            "step {}: task {:.6} attn {:.6} total {:.6}{}",
            last.step,
            last.task_loss,
            last.attn_loss,
            last.total_loss,
            last.eval_gp_p5.map(|v| format!(" eval gp_p5 {v:.4}")).unwrap_or_default()
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

pub fn eval_cmd(a: &EvalArgs) -> CliResult<()> {
    if !a.model.exists() {
        return Err(CliError::user(format!("model file {} not found", a.model.display())));
    }
    let params = load_params(&a.model)?;
    let vocab = load_vocab(a.vocab.as_deref())?;
    if vocab.len() != params.config().vocab_size {
        return Err(CliError::user(format!(
            "vocabulary has {} tokens but the model expects {}",
            vocab.len(),
            params.config().vocab_size
        )));
    }
    let records = read_dataset(&a.data)?;
    let (selection, warning) = LayerSelection::parse(&a.select, params.config().n_layers)?;
    if let Some(w) = warning {
        warn!("{w}");
    }
    let config = EvalConfig {
        selection,
        fusion: a.fusion,
        synonyms: a.synonyms.then(|| (SynonymTable::standard(), a.seed)),
    };
    let report = evaluate_dataset(&params, &records, &vocab, &config)?;
    let csv = report.to_csv();
    match &a.out {
        Some(p) => {
            write(p, &csv)?;
            let col = |c: &str| report.mean(c).map_or("n/a".into(), |v| format!("{v:.4}"));
            println!(
                "{} samples: gp_p5 {} auc {} nss {} ap {} precision {}",
                report.len(),
                col("gp_p5"),
                col("auc"),
                col("nss"),
                col("ap"),
                col("precision")
            );
        }
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn ablate_cmd(a: &AblateArgs) -> CliResult<()> {
    let study: Study = a.study.parse()?;
    let mut base = a.run.resolve()?;
    if base.seed.is_none() {
        // each run sets its own seed from --seeds
        base.seed = Some(0);
    }
    base.validate()?;
    let vocab = load_vocab(base.vocab.as_deref())?;
    let train_set = load_data(base.train_data.as_deref(), "training")?;
    let eval = load_data(base.eval_data.as_deref(), "evaluation")?;
    if eval.is_empty() {
        return Err(CliError::user("evaluation dataset is empty"));
    }
    let seeds = if a.seeds.is_empty() { DEFAULT_SEEDS.to_vec() } else { a.seeds.clone() };
    let sweep = run_study(study, &base, &a.sizes, &seeds, &train_set, &eval, &vocab)?;
    write(&a.out, &sweep.to_csv())?;
    println!("wrote {} rows to {}", sweep.rows.len(), a.out.display());
    Ok(())
}

/// Tolerances of the gradient suites.
pub const NUMERICS_TOL: f64 = 1e-4;
pub const MODEL_TOL: f64 = 1e-3;
pub const LOSS_TOL: f64 = 1e-4;

/// One line of the gradient report.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub name: String,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub checked: usize,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tolerance
    }
}

/// Runs the numerics, model and loss suites. The model suite uses one trial
/// per twenty requested (at least one) because each trial perturbs every
/// parameter.
pub fn gradcheck(trials: usize, seed: u64, inject_fault: bool) -> CliResult<Vec<SuiteResult>> {
    let trials = trials.max(1);
    let mut out = Vec::new();
    for (name, r) in numerics_suite(trials, seed)? {
        out.push(SuiteResult {
            name: format!("numerics/{name}"),
            max_rel_err: r.max_rel_err,
            tolerance: NUMERICS_TOL,
            checked: r.checked,
        });
    }
    let r = model_gradcheck_suite(trials.div_ceil(20), seed)?;
    out.push(SuiteResult {
        name: "model/full".into(),
        max_rel_err: r.max_rel_err,
        tolerance: MODEL_TOL,
        checked: r.checked,
    });
    for (kind, r) in gradcheck_suite(trials, seed, inject_fault)? {
        out.push(SuiteResult {
            name: format!("align/{kind}"),
            max_rel_err: r.max_rel_err,
            tolerance: LOSS_TOL,
            checked: r.checked,
        });
    }
    Ok(out)
}

pub fn gradcheck_cmd(a: &GradcheckArgs) -> CliResult<()> {
    let results = gradcheck(a.trials, a.seed, a.inject_fault)?;
    let mut failed = 0;
    for r in &results {
        println!(
            "{:<28} max_rel_err {:.3e}  tol {:.0e}  checked {:>7}  {}",
            r.name,
            r.max_rel_err,
            r.tolerance,
            r.checked,
            if r.passed() { "PASS" } else { "FAIL" }
        );
        if !r.passed() {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(CliError::Internal(format!("{failed} gradient suite(s) failed")));
    }
    Ok(())
}

pub fn plot_cmd(a: &PlotArgs) -> CliResult<()> {
    let text = fs::read_to_string(&a.input).map_err(|e| CliError::user(format!("{}: {e}", a.input.display())))?;
    let table = Table::parse(&text).map_err(|e| CliError::user(format!("{}: {e}", a.input.display())))?;
    let title = a
        .title
        .clone()
        .unwrap_or_else(|| a.input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default());
    let svg = match (&a.bars, &a.x, &a.y) {
        (Some(cols), _, _) => bar_chart(&table, cols, &title)?,
        (None, Some(x), Some(ys)) => line_chart(&table, x, ys, &title)?,
        _ => return Err(CliError::user("give --bars COLS or both --x COL and --y COLS")),
    };
    write(&a.out, &svg)?;
    info!("wrote {}", a.out.display());
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Ablate(a) => ablate_cmd(a),
        Command::Gradcheck(a) => gradcheck_cmd(a),
        Command::Plot(a) => plot_cmd(a),
    }
}

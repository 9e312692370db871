//! Command-line pipeline: `ingest`, `train`, `eval` and `pmi-check`.
//!
//! Settings resolve as flags over a JSON config file over defaults. Every JSON artifact
//! embeds the resolved config and the build version; nothing time-dependent is written,
//! so reruns with the same config are byte-identical.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cooccurrence::{dyn_tensor, dyn_tensor_sampled, stat_tensor, statdyn_tensor, CooccurrenceTensor, ModeRole};
use crate::eval::{
    run_classification, run_reconstruction, sir_simulate_surviving, EvalReport, OperatorTag, ProtocolConfig,
    ReportParams, SirConfig, INFECTION_CONVENTION,
};
use crate::hosgns::{reconstruct_spmi, train, EmbeddingSet, ExportMeta, Factor, PlantedTensor, Precision, TrainConfig};
use crate::seed;
use crate::supra::{build_supra, WalkConfig};
use crate::temporal_graph::{parse_contact_lines, TimeVaryingGraph};

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+", env!("HOSGNS_GIT_DESCRIBE"));

/// File written by `train` next to the run directories.
const TRAIN_SUMMARY: &str = "train.json";
/// SIR redraws allowed before a realization counts as extinct.
const SIR_ATTEMPTS: usize = 100;
/// Support entries compared by `pmi-check`.
const PMI_SAMPLES: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TensorKind {
    Stat,
    Dyn,
    Statdyn,
}

impl TensorKind {
    fn name(self) -> &'static str {
        match self {
            Self::Stat => "stat",
            Self::Dyn => "dyn",
            Self::Statdyn => "statdyn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Classify,
    Reconstruct,
    PmiCheck,
}

/// Everything a pipeline run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Raw contact file, or a graph JSON written by `ingest`.
    pub input: Option<PathBuf>,
    pub window_seconds: u64,
    pub tensor: TensorKind,
    /// Estimate the random-walk tensor from sampled walks instead of enumerating it.
    pub sampled_walks: bool,
    /// `seed` is replaced by one derived from the master seed.
    pub walk: WalkConfig,
    /// `seed` is replaced per run by one derived from the master seed.
    pub train: TrainConfig,
    pub task: TaskKind,
    /// `(beta, mu)` pairs evaluated by the classification task.
    pub sir_grid: Vec<(f64, f64)>,
    pub runs: usize,
    pub splits: usize,
    pub operator: OperatorTag,
    pub fraction: f64,
    pub output: PathBuf,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: None,
            window_seconds: 600,
            tensor: TensorKind::Stat,
            sampled_walks: false,
            walk: WalkConfig::default(),
            train: TrainConfig::default(),
            task: TaskKind::Reconstruct,
            sir_grid: vec![(0.25, 0.002)],
            runs: 5,
            splits: 10,
            operator: OperatorTag::Hadamard,
            fraction: 0.7,
            output: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_seconds == 0 {
            bail!("window_seconds must be positive");
        }
        if self.runs == 0 || self.splits == 0 {
            bail!("runs and splits must be positive");
        }
        if !(0.0 < self.fraction && self.fraction < 1.0) {
            bail!("fraction must lie in (0, 1)");
        }
        for &(beta, mu) in &self.sir_grid {
            if !(0.0..=1.0).contains(&beta) || !(0.0..=1.0).contains(&mu) {
                bail!("SIR pair ({beta}, {mu}) outside [0, 1]");
            }
        }
        self.walk.validate()?;
        self.train.validate()?;
        Ok(())
    }

    fn input(&self) -> Result<&Path> {
        self.input.as_deref().context("no input given; pass --input or set \"input\" in the config file")
    }

    fn dataset(&self) -> String {
        self.input
            .as_deref()
            .and_then(Path::file_stem)
            .map_or_else(|| "unknown".to_string(), |s| s.to_string_lossy().into_owned())
    }

    fn protocol(&self) -> ProtocolConfig {
        ProtocolConfig {
            operator: self.operator,
            n_splits: self.splits,
            fraction: self.fraction,
            seed: seed::derive(self.seed, "protocol", 0),
            ..ProtocolConfig::default()
        }
    }

    fn train_seed(&self, run: usize) -> u64 {
        seed::derive(self.seed, "train", run as u64)
    }
}

#[derive(Debug, Parser)]
#[command(name = "hosgns", version = VERSION, about = "Higher-order skip-gram embeddings of time-varying graphs")]
pub struct Cli {
    /// JSON pipeline config; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "HOSGNS_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a contact file, print its statistics and write the graph as `<name>.json`.
    Ingest(IngestArgs),
    /// Build a co-occurrence tensor and train embeddings on it.
    Train(TrainArgs),
    /// Evaluate trained embeddings on a downstream task.
    Eval(EvalArgs),
    /// Compare embedding scores with the shifted PMI of their tensor.
    PmiCheck(PmiArgs),
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Raw `timestamp id1 id2` file, or a graph JSON written by `ingest`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub window_seconds: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
}

#[derive(Debug, Args)]
pub struct TensorArgs {
    #[arg(long, value_enum)]
    pub tensor: Option<TensorKind>,
    /// Random-walk window.
    #[arg(long)]
    pub window: Option<usize>,
    /// Estimate the random-walk tensor from sampled walks.
    #[arg(long)]
    pub sampled_walks: bool,
    #[arg(long)]
    pub walks_per_node: Option<usize>,
    #[arg(long)]
    pub walk_length: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub tensor: TensorArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Independent training runs.
    #[arg(long)]
    pub runs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub negatives_per_positive: Option<usize>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[arg(long, value_enum)]
    pub precision: Option<PrecisionArg>,
    /// Split each batch over worker threads.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PrecisionArg {
    Single,
    Double,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Directory written by `train`.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, value_enum)]
    pub task: Option<TaskKind>,
    #[arg(long, value_parser = parse_operator)]
    pub operator: Option<OperatorTag>,
    #[arg(long)]
    pub splits: Option<usize>,
    /// Infection probability; with `--mu` replaces the configured SIR grid.
    #[arg(long, requires = "mu")]
    pub beta: Option<f64>,
    #[arg(long, requires = "beta")]
    pub mu: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PmiArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub tensor: TensorArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Directory written by `train`; when absent, one run is trained here.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Use the planted rank-two fixture with this strength instead of a graph.
    #[arg(long)]
    pub planted: Option<f64>,
}

fn parse_operator(s: &str) -> Result<OperatorTag, String> {
    s.parse().map_err(|e: crate::eval::EvalError| e.to_string())
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

impl GraphArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(p) = &self.input {
            cfg.input = Some(p.clone());
        }
        if let Some(w) = self.window_seconds {
            cfg.window_seconds = w;
        }
        if let Some(o) = &self.output {
            cfg.output = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
    }
}

impl TensorArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(t) = self.tensor {
            cfg.tensor = t;
        }
        if let Some(w) = self.window {
            cfg.walk.window = w;
        }
        if self.sampled_walks {
            cfg.sampled_walks = true;
        }
        if let Some(n) = self.walks_per_node {
            cfg.walk.walks_per_node = n;
        }
        if let Some(l) = self.walk_length {
            cfg.walk.walk_length = l;
        }
    }
}

impl ModelArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        let t = &mut cfg.train;
        if let Some(v) = self.dim {
            t.dim = v;
        }
        if let Some(v) = self.iterations {
            t.iterations = v;
        }
        if let Some(v) = self.batch {
            t.batch = v;
        }
        if let Some(v) = self.kappa {
            t.kappa = v;
        }
        if let Some(v) = self.lr {
            t.lr_start = v;
        }
        if let Some(v) = self.negatives_per_positive {
            t.negatives_per_positive = v;
        }
        if let Some(v) = self.checkpoint_every {
            t.checkpoint_every = v;
        }
        if let Some(p) = self.precision {
            t.precision = match p {
                PrecisionArg::Single => Precision::Single,
                PrecisionArg::Double => Precision::Double,
            };
        }
        if self.parallel {
            t.deterministic = false;
        }
    }
}

fn load_graph(cfg: &PipelineConfig) -> Result<TimeVaryingGraph> {
    let path = cfg.input()?;
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let graph = if path.extension().is_some_and(|e| e == "json") {
        TimeVaryingGraph::from_json(&std::io::read_to_string(file)?)
    } else {
        parse_contact_lines(BufReader::new(file), cfg.window_seconds)
    };
    graph.with_context(|| format!("loading graph from {}", path.display()))
}

/// The tensor selected by `cfg`, with the number of connected supra-graph components
/// when random walks are involved.
fn build_tensor(g: &TimeVaryingGraph, cfg: &PipelineConfig) -> Result<(CooccurrenceTensor, Option<usize>)> {
    let walk = WalkConfig { seed: seed::derive(cfg.seed, "walks", 0), ..cfg.walk };
    let random_walk = || -> Result<(CooccurrenceTensor, usize)> {
        let supra = build_supra(g);
        let components = supra.adjacency().components().0;
        if components > 1 {
            log::info!("supra graph has {components} components; walk probabilities use the global volume");
        }
        let t = if cfg.sampled_walks { dyn_tensor_sampled(&supra, &walk)? } else { dyn_tensor(&supra, walk.window)? };
        Ok((t, components))
    };
    Ok(match cfg.tensor {
        TensorKind::Stat => (stat_tensor(g)?, None),
        TensorKind::Dyn => {
            let (t, c) = random_walk()?;
            (t, Some(c))
        }
        TensorKind::Statdyn => {
            let (t, c) = random_walk()?;
            (statdyn_tensor(&stat_tensor(g)?, &t)?, Some(c))
        }
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run_dir(root: &Path, run: usize) -> PathBuf {
    root.join(format!("run{run}"))
}

fn write_embeddings(dir: &Path, e: &EmbeddingSet, meta: ExportMeta) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (n, f) in e.factors().iter().enumerate() {
        let path = dir.join(format!("{}.tsv", f.role().factor_name()));
        let mut out = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        e.write_factor_tsv(n, meta, &mut out)?;
        out.flush()?;
    }
    Ok(())
}

fn read_embeddings(dir: &Path, order: usize) -> Result<EmbeddingSet> {
    let factors: Vec<Factor> = ModeRole::defaults(order)
        .into_iter()
        .map(|role| {
            let path = dir.join(format!("{}.tsv", role.factor_name()));
            let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
            Ok(EmbeddingSet::read_factor_tsv(BufReader::new(file))?.0)
        })
        .collect::<Result<_>>()?;
    Ok(EmbeddingSet::from_factors(factors)?)
}

/// Contents of `train.json`.
#[derive(Debug, Serialize, Deserialize)]
struct TrainSummary {
    version: String,
    config: PipelineConfig,
    dataset: String,
    model: String,
    order: usize,
    mode_sizes: Vec<usize>,
    nnz: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    supra_components: Option<usize>,
    runs: Vec<RunSummary>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RunSummary {
    seed: u64,
    final_loss: Option<f64>,
}

fn model_name(kind: TensorKind) -> String {
    format!("HOSGNS({})", kind.name())
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn cmd_ingest(args: &IngestArgs, mut cfg: PipelineConfig) -> Result<()> {
    args.graph.apply(&mut cfg);
    cfg.validate()?;
    let g = load_graph(&cfg)?;
    let stats = g.stats();
    fs::create_dir_all(&cfg.output)?;
    fs::write(cfg.output.join(format!("{}.json", cfg.dataset())), g.to_json()? + "\n")?;
    write_json(
        &cfg.output.join("stats.json"),
        &json!({ "version": VERSION, "config": cfg, "dataset": cfg.dataset(), "stats": stats }),
    )?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(())
}

fn cmd_train(args: &TrainArgs, mut cfg: PipelineConfig) -> Result<()> {
    args.graph.apply(&mut cfg);
    args.tensor.apply(&mut cfg);
    args.model.apply(&mut cfg);
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    cfg.validate()?;
    let g = load_graph(&cfg)?;
    let (tensor, supra_components) = build_tensor(&g, &cfg)?;
    log::info!("{} tensor with modes {:?} and {} entries", cfg.tensor.name(), tensor.mode_sizes(), tensor.nnz());

    let mut runs = Vec::with_capacity(cfg.runs);
    for run in 0..cfg.runs {
        let seed = cfg.train_seed(run);
        let result = train(&tensor, TrainConfig { seed, ..cfg.train.clone() })?;
        let dir = run_dir(&cfg.output, run);
        write_embeddings(&dir, &result.embeddings, ExportMeta { kappa: cfg.train.kappa, seed })?;
        fs::write(dir.join("train_log.jsonl"), result.log_lines())?;
        let final_loss = result.checkpoints.last().map(|c| c.loss);
        println!("run {run}: seed {seed}, final sampled loss {}", final_loss.map_or("n/a".into(), |l| format!("{l:.6}")));
        runs.push(RunSummary { seed, final_loss });
    }
    let summary = TrainSummary {
        version: VERSION.to_string(),
        dataset: cfg.dataset(),
        model: model_name(cfg.tensor),
        order: tensor.order(),
        mode_sizes: tensor.mode_sizes().to_vec(),
        nnz: tensor.nnz(),
        supra_components,
        runs,
        config: cfg,
    };
    write_json(&summary.config.output.join(TRAIN_SUMMARY), &summary)?;
    println!("wrote {} run(s) to {}", summary.runs.len(), summary.config.output.display());
    Ok(())
}

fn read_summary(dir: &Path) -> Result<TrainSummary> {
    let path = dir.join(TRAIN_SUMMARY);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_eval(args: &EvalArgs, mut cfg: PipelineConfig) -> Result<()> {
    let summary = read_summary(&args.embeddings)?;
    if cfg.input.is_none() {
        cfg.input = summary.config.input.clone();
        cfg.window_seconds = summary.config.window_seconds;
    }
    cfg.runs = summary.runs.len();
    cfg.tensor = summary.config.tensor;
    cfg.sampled_walks = summary.config.sampled_walks;
    cfg.walk = summary.config.walk;
    cfg.train = summary.config.train.clone();
    args.graph.apply(&mut cfg);
    if let Some(t) = args.task {
        cfg.task = t;
    }
    if let Some(op) = args.operator {
        cfg.operator = op;
    }
    if let Some(s) = args.splits {
        cfg.splits = s;
    }
    if let (Some(beta), Some(mu)) = (args.beta, args.mu) {
        cfg.sir_grid = vec![(beta, mu)];
    }
    cfg.validate()?;
    let g = load_graph(&cfg)?;
    let embeddings: Vec<EmbeddingSet> = (0..summary.runs.len())
        .map(|r| read_embeddings(&run_dir(&args.embeddings, r), summary.order))
        .collect::<Result<_>>()?;
    let protocol = cfg.protocol();
    let config = serde_json::to_value(&cfg)?;
    let finish = |mut report: EvalReport, params: ReportParams| -> EvalReport {
        report.dataset = cfg.dataset();
        report.model = summary.model.clone();
        report.params = params;
        report.seeds.runs = summary.runs.iter().map(|r| r.seed).collect();
        report.config = Some(config.clone());
        report.version = Some(VERSION.to_string());
        report
    };

    let reports: Vec<(String, EvalReport)> = match cfg.task {
        TaskKind::Reconstruct => {
            let report = run_reconstruction(&g, &embeddings, &protocol)?;
            vec![("reconstruct.json".into(), finish(report, ReportParams::default()))]
        }
        TaskKind::Classify => {
            let mut out = Vec::new();
            for (p, &(beta, mu)) in cfg.sir_grid.iter().enumerate() {
                let sir_seed = seed::derive(cfg.seed, "sir", p as u64);
                let trajectories = (0..embeddings.len())
                    .map(|r| sir_simulate_surviving(&g, &SirConfig::new(beta, mu, seed::derive(sir_seed, "run", r as u64)), SIR_ATTEMPTS))
                    .collect::<Result<Vec<_>, _>>()?;
                let report = run_classification(&g, &embeddings, &trajectories, &protocol)?;
                let params =
                    ReportParams { beta: Some(beta), mu: Some(mu), infection: Some(INFECTION_CONVENTION.into()) };
                out.push((format!("classify_beta{beta}_mu{mu}.json"), finish(report, params)));
            }
            out
        }
        TaskKind::PmiCheck => bail!("the pmi-check task runs through the pmi-check command"),
    };
    for (name, report) in &reports {
        write_json(&cfg.output.join(name), report)?;
        let params = match (report.params.beta, report.params.mu) {
            (Some(b), Some(m)) => format!(" beta={b} mu={m}"),
            _ => String::new(),
        };
        println!(
            "{} {} {}{params}: macro-F1 {:.4} +- {:.4} over {} runs x {} splits",
            report.model,
            report.operator.name(),
            name.trim_end_matches(".json"),
            report.macro_f1_mean,
            report.macro_f1_std,
            report.n_runs,
            report.n_splits
        );
    }
    Ok(())
}

fn cmd_pmi_check(args: &PmiArgs, mut cfg: PipelineConfig) -> Result<()> {
    args.graph.apply(&mut cfg);
    args.tensor.apply(&mut cfg);
    args.model.apply(&mut cfg);
    cfg.task = TaskKind::PmiCheck;
    cfg.validate()?;
    let (tensor, source) = match args.planted {
        Some(lambda) => (PlantedTensor::standard(lambda)?.tensor, format!("planted(lambda={lambda})")),
        None => {
            let g = load_graph(&cfg)?;
            (build_tensor(&g, &cfg)?.0, cfg.dataset())
        }
    };
    let (embeddings, kappa, run_seed) = match &args.embeddings {
        Some(dir) => {
            let summary = read_summary(dir)?;
            (read_embeddings(&run_dir(dir, 0), summary.order)?, summary.config.train.kappa, summary.runs[0].seed)
        }
        None => {
            let seed = cfg.train_seed(0);
            let result = train(&tensor, TrainConfig { seed, ..cfg.train.clone() })?;
            (result.embeddings, cfg.train.kappa, seed)
        }
    };
    let rec = reconstruct_spmi(&embeddings, &tensor, kappa, PMI_SAMPLES, seed::derive(cfg.seed, "pmi-check", 0))?;
    let report: Value = json!({
        "task": "pmi-check",
        "source": source,
        "tensor": if args.planted.is_some() { "planted" } else { cfg.tensor.name() },
        "kappa": kappa,
        "run_seed": run_seed,
        "pairs": rec.pairs.len(),
        "r2": rec.r2,
        "max_abs_error": rec.max_abs_error,
        "config": cfg,
        "version": VERSION,
    });
    write_json(&cfg.output.join("pmi_check.json"), &report)?;
    println!("{source}: R^2 {:.6}, max |score - SPMI| {:.4} over {} entries", rec.r2, rec.max_abs_error, rec.pairs.len());
    Ok(())
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    let cfg = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a, cfg),
        Command::Train(a) => cmd_train(a, cfg),
        Command::Eval(a) => cmd_eval(a, cfg),
        Command::PmiCheck(a) => cmd_pmi_check(a, cfg),
    }
}

pub fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"window_seconds": 300, "seed": 9, "train": {"dim": 8}}"#).unwrap();
        let cli = Cli::try_parse_from(["hosgns", "--config", path.to_str().unwrap(), "train", "--seed", "4"]).unwrap();
        let Command::Train(args) = &cli.command else { panic!("expected train") };
        let mut cfg = load_config(cli.config.as_deref()).unwrap();
        args.graph.apply(&mut cfg);
        args.model.apply(&mut cfg);
        assert_eq!((cfg.window_seconds, cfg.seed, cfg.train.dim), (300, 4, 8));
        assert_eq!(cfg.train.iterations, TrainConfig::default().iterations);
    }

    #[test]
    fn zero_window_is_rejected_by_the_parser() {
        assert!(Cli::try_parse_from(["hosgns", "ingest", "--input", "x", "--window-seconds", "0"]).is_err());
    }

    #[test]
    fn unknown_operator_lists_the_valid_ones() {
        let err = Cli::try_parse_from(["hosgns", "eval", "--embeddings", "d", "--operator", "cosine"]).unwrap_err();
        let text = err.to_string();
        assert!(OperatorTag::ALL.iter().all(|op| text.contains(op.name())), "{text}");
    }

    #[test]
    fn unknown_config_keys_are_errors() {
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"windw_seconds": 3}"#).is_err());
    }
}

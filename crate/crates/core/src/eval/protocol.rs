use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{combine_into, feature_dim, OperatorTag, Target};
use super::logreg::{macro_f1, LogReg, LogRegConfig};
use super::sir::SirTrajectory;
use super::split::{make_split, negative_events, SplitSpec};
use super::EvalError;
use crate::hosgns::EmbeddingSet;
use crate::seed;
use crate::temporal_graph::TimeVaryingGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Reconstruction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub operator: OperatorTag,
    pub n_splits: usize,
    /// Share of nodes and of slices assigned to training.
    pub fraction: f64,
    pub seed: u64,
    /// Redraws allowed per split when its instance sets are unusable.
    pub max_split_attempts: usize,
    pub logreg: LogRegConfig,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            operator: OperatorTag::Hadamard,
            n_splits: 10,
            fraction: 0.7,
            seed: 0,
            max_split_attempts: 20,
            logreg: LogRegConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// How `beta` turns into a per-event transmission probability.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infection: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportSeeds {
    pub protocol: u64,
    /// Seed of every embedding run.
    pub runs: Vec<u64>,
    /// Seed of the split used by each `(run, split)` cell, run-major.
    pub splits: Vec<u64>,
}

/// Macro-F1 summary over a grid of embedding runs and splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub dataset: String,
    pub model: String,
    pub operator: OperatorTag,
    pub dim: usize,
    pub params: ReportParams,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
    pub n_runs: usize,
    pub n_splits: usize,
    pub seeds: ReportSeeds,
    /// Score of every `(run, split)` cell, run-major.
    pub scores: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
}

/// Population mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Labeled instances of one split side.
#[derive(Default)]
struct Side {
    features: Vec<f64>,
    labels: Vec<usize>,
}

/// Builds both sides of a split and returns `None` when either cannot be scored.
fn sides(
    instances: &[(Target, usize)],
    side_of: impl Fn(Target) -> Option<bool>,
    op: OperatorTag,
    e: &EmbeddingSet,
) -> Result<Option<(Side, Side)>, EvalError> {
    let (mut train, mut test) = (Side::default(), Side::default());
    for &(target, label) in instances {
        let side = match side_of(target) {
            Some(true) => &mut train,
            Some(false) => &mut test,
            None => continue,
        };
        combine_into(op, e, target, &mut side.features)?;
        side.labels.push(label);
    }
    let classes = |l: &[usize]| l.iter().any(|&x| x != l[0]);
    if train.labels.is_empty() || test.labels.is_empty() || !classes(&train.labels) {
        return Ok(None);
    }
    Ok(Some((train, test)))
}

/// Scores one `(run, split)` cell, redrawing the split while it is unusable.
fn score_cell(
    g: &TimeVaryingGraph,
    e: &EmbeddingSet,
    instances: &[(Target, usize)],
    cfg: &ProtocolConfig,
    split_index: usize,
) -> Result<(f64, u64), EvalError> {
    let base = seed::derive(cfg.seed, "split", split_index as u64);
    let dim = feature_dim(cfg.operator, e, matches!(instances.first(), Some((Target::Node { .. }, _))));
    for attempt in 0..cfg.max_split_attempts.max(1) as u64 {
        let split_seed = if attempt == 0 { base } else { seed::derive(base, "retry", attempt) };
        let split: SplitSpec = match make_split(g, cfg.fraction, split_seed) {
            Ok(s) => s,
            Err(EvalError::Degenerate(msg)) => {
                log::info!("split {split_index} attempt {attempt}: {msg}; redrawing");
                continue;
            }
            Err(e) => return Err(e),
        };
        let side_of = |t: Target| match t {
            Target::Node { i, k } => split.node_side(i, k),
            Target::Event { i, j, k } => split.event_side(i, j, k),
        };
        let Some((train, test)) = sides(instances, side_of, cfg.operator, e)? else {
            log::info!("split {split_index} attempt {attempt} has an unusable side; redrawing");
            continue;
        };
        let model = LogReg::fit(&train.features, dim, &train.labels, &cfg.logreg)?;
        let predicted = model.predict(&test.features);
        return Ok((macro_f1(&test.labels, &predicted), split_seed));
    }
    Err(EvalError::Degenerate(format!(
        "split {split_index} stayed unusable after {} attempts",
        cfg.max_split_attempts
    )))
}

fn run_grid(
    g: &TimeVaryingGraph,
    embeddings: &[EmbeddingSet],
    instances_of: impl Fn(usize) -> Vec<(Target, usize)> + Sync,
    cfg: &ProtocolConfig,
    task: Task,
) -> Result<EvalReport, EvalError> {
    if embeddings.is_empty() || cfg.n_splits == 0 {
        return Err(EvalError::Config("need at least one run and one split".into()));
    }
    let dim = embeddings[0].dim();
    let cells: Vec<(usize, usize)> =
        (0..embeddings.len()).flat_map(|r| (0..cfg.n_splits).map(move |s| (r, s))).collect();
    let instances: Vec<Vec<(Target, usize)>> = (0..embeddings.len()).map(&instances_of).collect();
    let results: Vec<(f64, u64)> = cells
        .par_iter()
        .map(|&(r, s)| score_cell(g, &embeddings[r], &instances[r], cfg, s))
        .collect::<Result<_, _>>()?;
    let scores: Vec<f64> = results.iter().map(|r| r.0).collect();
    let (macro_f1_mean, macro_f1_std) = mean_std(&scores);
    Ok(EvalReport {
        task,
        dataset: String::new(),
        model: String::new(),
        operator: cfg.operator,
        dim,
        params: ReportParams::default(),
        macro_f1_mean,
        macro_f1_std,
        n_runs: embeddings.len(),
        n_splits: cfg.n_splits,
        seeds: ReportSeeds { protocol: cfg.seed, runs: Vec::new(), splits: results.iter().map(|r| r.1).collect() },
        scores,
        config: None,
        version: None,
    })
}

/// Classifies the SIR state of active nodes, pairing trajectory `r` with embedding run `r`.
pub fn run_classification(
    g: &TimeVaryingGraph,
    embeddings: &[EmbeddingSet],
    trajectories: &[SirTrajectory],
    cfg: &ProtocolConfig,
) -> Result<EvalReport, EvalError> {
    if embeddings.len() != trajectories.len() {
        return Err(EvalError::Config(format!(
            "{} embedding runs for {} SIR realizations",
            embeddings.len(),
            trajectories.len()
        )));
    }
    if trajectories.iter().any(|t| t.num_nodes() != g.num_nodes() || t.num_times() != g.num_times()) {
        return Err(EvalError::Config("SIR realization does not match the graph".into()));
    }
    let instances_of = |r: usize| -> Vec<(Target, usize)> {
        trajectories[r].labels(g).into_iter().map(|((i, k), s)| (Target::Node { i, k }, s.label())).collect()
    };
    run_grid(g, embeddings, instances_of, cfg, Task::Classification)
}

/// Separates the events of `g` from as many sampled non-events.
pub fn run_reconstruction(
    g: &TimeVaryingGraph,
    embeddings: &[EmbeddingSet],
    cfg: &ProtocolConfig,
) -> Result<EvalReport, EvalError> {
    let negatives = negative_events(g, seed::derive(cfg.seed, "negatives", 0))?;
    let instances: Vec<(Target, usize)> = g
        .events()
        .iter()
        .map(|e| (Target::Event { i: e.i, j: e.j, k: e.k }, 1))
        .chain(negatives.iter().map(|&(i, j, k)| (Target::Event { i, j, k }, 0)))
        .collect();
    run_grid(g, embeddings, |_| instances.clone(), cfg, Task::Reconstruction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooccurrence::ModeRole;
    use crate::eval::{sir_simulate, SirConfig};
    use crate::hosgns::Factor;

    fn ring() -> TimeVaryingGraph {
        let mut events = Vec::new();
        for k in 0..12 {
            for i in 0..10 {
                if (i * 7 + k * 3) % 4 != 0 {
                    events.push((i, (i + 1 + k % 3) % 10, k, 1.0));
                }
            }
        }
        TimeVaryingGraph::from_events(events).unwrap()
    }

    /// Context rows one-hot encode the state of each node, which the trajectory keeps
    /// constant over time; all other rows are ones.
    fn onehot_embeddings(g: &TimeVaryingGraph, traj: &SirTrajectory) -> EmbeddingSet {
        let (dim, n, t) = (3, g.num_nodes(), g.num_times());
        let roles = ModeRole::defaults(3);
        let c: Vec<f64> = (0..n)
            .flat_map(|i| {
                let s = traj.state(i, t - 1).label();
                (0..dim).map(move |r| f64::from(u8::from(r == s)))
            })
            .collect();
        EmbeddingSet::from_factors(vec![
            Factor::new(roles[0], n, dim, vec![1.0; n * dim]).unwrap(),
            Factor::new(roles[1], n, dim, c).unwrap(),
            Factor::new(roles[2], t, dim, vec![1.0; t * dim]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn perfect_features_score_one() {
        let g = ring();
        assert_eq!(g.activity(0)[0], 0);
        let traj = sir_simulate(&g, &SirConfig { beta: 0.0, mu: 0.0, seed: 1, initial_infected: Some(0) }).unwrap();
        let e = onehot_embeddings(&g, &traj);
        let cfg = ProtocolConfig { n_splits: 4, ..ProtocolConfig::default() };
        let report = run_classification(&g, &[e.clone()], &[traj.clone()], &cfg).unwrap();
        assert_eq!(report.scores, vec![1.0; 4]);
        assert_eq!((report.macro_f1_mean, report.macro_f1_std), (1.0, 0.0));
        assert!(run_classification(&g, &[e.clone(), e], &[traj], &cfg).is_err());
    }

    #[test]
    fn random_features_reconstruct_near_chance() {
        let g = ring();
        let mut rng = seed::rng(3);
        let e = EmbeddingSet::uniform(&[10, 10, 12], &ModeRole::defaults(3), 8, 8.0, &mut rng).unwrap();
        let cfg = ProtocolConfig { n_splits: 6, ..ProtocolConfig::default() };
        let report = run_reconstruction(&g, &[e], &cfg).unwrap();
        assert_eq!(report.scores.len(), 6);
        assert!(report.macro_f1_mean > 0.2 && report.macro_f1_mean < 0.8, "{}", report.macro_f1_mean);
    }

    #[test]
    fn population_std() {
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 1.0));
    }
}

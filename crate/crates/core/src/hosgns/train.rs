use serde::{Deserialize, Serialize};

use super::embedding::{EmbeddingSet, Factor};
use super::kernel::{accumulate_view, accumulate_view_parallel, Batch, Gradient, Real, View};
use super::loss::LossReport;
use super::HosgnsError;
use crate::cooccurrence::{CooccurrenceTensor, ModeRole, NegativeSampler, PositiveSampler};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Adam,
    Sgd,
}

/// Arithmetic used by the training kernels and optimizer state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Single,
    Double,
}

/// Slices of the batch processed concurrently in performance mode. Fixed, so results
/// do not depend on the worker count.
const PARALLEL_CHUNKS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dim: usize,
    /// Weight of the negative term.
    pub kappa: f64,
    /// Positive tuples per step.
    pub batch: usize,
    /// Negatives drawn per positive; their summed weight is `kappa` per positive.
    pub negatives_per_positive: usize,
    pub lr_start: f64,
    pub iterations: usize,
    pub seed: u64,
    pub init_scale: f64,
    pub optimizer: Optimizer,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub deterministic: bool,
    pub checkpoint_every: usize,
    pub precision: Precision,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            kappa: 5.0,
            batch: 50_000,
            negatives_per_positive: 1,
            lr_start: 0.05,
            iterations: 10_000,
            seed: 0,
            init_scale: 0.5,
            optimizer: Optimizer::Adam,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            deterministic: true,
            checkpoint_every: 100,
            precision: Precision::Single,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), HosgnsError> {
        let fail = |m: &str| Err(HosgnsError::Config(m.into()));
        if self.dim == 0 || self.batch == 0 || self.iterations == 0 || self.checkpoint_every == 0 {
            return fail("dim, batch, iterations and checkpoint_every must be positive");
        }
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return fail("kappa must be at least 1");
        }
        if self.negatives_per_positive == 0 {
            return fail("negatives_per_positive must be positive");
        }
        if !(self.lr_start > 0.0 && self.init_scale > 0.0 && self.adam_eps > 0.0) {
            return fail("lr_start, init_scale and adam_eps must be positive");
        }
        if !(0.0 < self.adam_beta1 && self.adam_beta1 < 1.0 && 0.0 < self.adam_beta2 && self.adam_beta2 < 1.0) {
            return fail("adam betas must lie in (0, 1)");
        }
        Ok(())
    }

    /// Learning rate at zero-based step `t`, decaying linearly to zero.
    pub fn learning_rate(&self, t: usize) -> f64 {
        self.lr_start * (1.0 - t as f64 / self.iterations as f64)
    }
}

/// Seeds of the three random streams used by training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamSeeds {
    pub init: u64,
    pub positive: u64,
    pub negative: u64,
}

impl StreamSeeds {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            init: seed::derive(seed, "init", 0),
            positive: seed::derive(seed, "positive", 0),
            negative: seed::derive(seed, "negative", 0),
        }
    }
}

/// Sampled loss at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iteration: usize,
    pub loss: f64,
    pub lr: f64,
    #[serde(skip)]
    pub report: Option<LossReport>,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub embeddings: EmbeddingSet,
    pub checkpoints: Vec<Checkpoint>,
}

impl TrainResult {
    /// One JSON object per checkpoint: `{"iteration", "loss", "lr"}`.
    pub fn log_lines(&self) -> String {
        self.checkpoints
            .iter()
            .map(|c| serde_json::to_string(c).expect("plain numbers serialize") + "\n")
            .collect()
    }
}

/// Stepwise trainer running its kernels in `T`; [`train`] runs it to completion.
pub struct Trainer<'t, T: Real = f64> {
    cfg: TrainConfig,
    mode_sizes: Vec<usize>,
    roles: Vec<ModeRole>,
    params: Vec<Vec<T>>,
    positives: PositiveSampler<'t>,
    noise: NegativeSampler,
    batch: Batch,
    grad: Gradient<T>,
    scratch: Vec<Gradient<T>>,
    first_moment: Vec<Vec<T>>,
    second_moment: Vec<Vec<T>>,
    step: usize,
}

impl<'t, T: Real> Trainer<'t, T> {
    pub fn new(tensor: &'t CooccurrenceTensor, cfg: TrainConfig) -> Result<Self, HosgnsError> {
        cfg.validate()?;
        let seeds = StreamSeeds::from_seed(cfg.seed);
        let mut rng = seed::rng(seeds.init);
        let e = EmbeddingSet::uniform(tensor.mode_sizes(), tensor.roles(), cfg.dim, cfg.init_scale, &mut rng)?;
        Self::with_embeddings(tensor, cfg, &e)
    }

    /// Starts from given factors instead of a random initialization.
    pub fn with_embeddings(
        tensor: &'t CooccurrenceTensor,
        cfg: TrainConfig,
        embeddings: &EmbeddingSet,
    ) -> Result<Self, HosgnsError> {
        cfg.validate()?;
        if embeddings.mode_sizes() != tensor.mode_sizes() || embeddings.dim() != cfg.dim {
            return Err(HosgnsError::Dimension("initial factors do not fit the tensor".into()));
        }
        let seeds = StreamSeeds::from_seed(cfg.seed);
        let b = cfg.batch as f64;
        let batch = Batch::new(tensor.order(), 1.0 / b, cfg.kappa / (cfg.negatives_per_positive as f64 * b));
        let params: Vec<Vec<T>> =
            embeddings.factors().iter().map(|f| f.data().iter().map(|&x| T::of(x)).collect()).collect();
        let grad = Gradient::zeros(params.iter().map(Vec::len));
        Ok(Self {
            positives: PositiveSampler::new(tensor, seeds.positive)?,
            noise: NegativeSampler::new(tensor, seeds.negative)?,
            mode_sizes: embeddings.mode_sizes(),
            roles: embeddings.roles(),
            first_moment: grad.factors.clone(),
            second_moment: grad.factors.clone(),
            cfg,
            params,
            batch,
            grad,
            scratch: Vec::new(),
            step: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    /// Number of completed steps.
    pub fn iteration(&self) -> usize {
        self.step
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.cfg.iterations
    }

    /// Current factors, widened to `f64`.
    pub fn embeddings(&self) -> EmbeddingSet {
        let factors = self
            .params
            .iter()
            .zip(&self.mode_sizes)
            .zip(&self.roles)
            .map(|((p, &rows), &role)| {
                Factor::new(role, rows, self.cfg.dim, p.iter().map(|x| x.f64()).collect()).expect("shape kept")
            })
            .collect();
        EmbeddingSet::from_factors(factors).expect("dimension kept")
    }

    fn is_finite(&self) -> bool {
        self.params.iter().flatten().all(|x| x.is_finite())
    }

    /// Draws the next batch: each positive is followed by its negatives, which keep the
    /// positive's mode-0 index.
    fn draw_batch(&mut self) {
        let order = self.batch.order();
        let mut tuple = vec![0usize; order];
        let mut corrupt = vec![0usize; order];
        self.batch.clear();
        for _ in 0..self.cfg.batch {
            self.positives.sample_into(&mut tuple);
            self.batch.push_positive(&tuple);
            for _ in 0..self.cfg.negatives_per_positive {
                corrupt.copy_from_slice(&tuple);
                self.noise.corrupt(&mut corrupt);
                self.batch.push_negative(&corrupt);
            }
        }
    }

    /// Performs one optimization step and returns its sampled loss.
    pub fn step(&mut self) -> Result<Checkpoint, HosgnsError> {
        self.advance(true)
    }

    /// Performs one optimization step without evaluating the sampled loss, whose
    /// fields are left at zero in the returned checkpoint.
    pub fn step_without_loss(&mut self) -> Result<Checkpoint, HosgnsError> {
        self.advance(false)
    }

    fn advance(&mut self, with_loss: bool) -> Result<Checkpoint, HosgnsError> {
        let iteration = self.step;
        let lr = self.cfg.learning_rate(iteration);
        self.draw_batch();
        self.grad.clear();
        let view = View { factors: &self.params, dim: self.cfg.dim };
        let loss = if self.cfg.deterministic {
            accumulate_view(view, &self.batch, &mut self.grad, with_loss)
        } else {
            accumulate_view_parallel(view, &self.batch, &mut self.grad, &mut self.scratch, PARALLEL_CHUNKS, with_loss)
        };
        if !loss.total().is_finite() || !self.grad.factors.iter().flatten().all(|g| g.is_finite()) {
            return Err(HosgnsError::Divergence { iteration, lr });
        }
        self.apply(lr);
        self.step += 1;
        let report = LossReport::new(iteration, loss.positive_term, loss.negative_term);
        Ok(Checkpoint { iteration, loss: report.total, lr, report: Some(report) })
    }

    fn apply(&mut self, lr: f64) {
        match self.cfg.optimizer {
            Optimizer::Sgd => {
                let lr = T::of(lr);
                for (p, g) in self.params.iter_mut().zip(&self.grad.factors) {
                    p.iter_mut().zip(g).for_each(|(x, &g)| *x = *x - lr * g);
                }
            }
            Optimizer::Adam => {
                let (b1, b2) = (self.cfg.adam_beta1, self.cfg.adam_beta2);
                let t = (self.step + 1) as i32;
                let step = T::of(lr / (1.0 - b1.powi(t)));
                let c2 = T::of(1.0 - b2.powi(t));
                let (eps, b1, b2) = (T::of(self.cfg.adam_eps), T::of(b1), T::of(b2));
                let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
                let layers = self.params.iter_mut().zip(&self.grad.factors).zip(&mut self.first_moment).zip(&mut self.second_moment);
                for (((p, g), m), v) in layers {
                    for (((x, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *m = b1 * *m + one_b1 * g;
                        *v = b2 * *v + one_b2 * g * g;
                        *x = *x - step * *m / ((*v / c2).sqrt() + eps);
                    }
                }
            }
        }
    }
}

fn run<T: Real>(tensor: &CooccurrenceTensor, cfg: TrainConfig) -> Result<TrainResult, HosgnsError> {
    let every = cfg.checkpoint_every;
    let mut trainer = Trainer::<T>::new(tensor, cfg)?;
    let mut checkpoints = Vec::new();
    while !trainer.is_done() {
        let iteration = trainer.iteration();
        if iteration % every != 0 && iteration + 1 != trainer.config().iterations {
            trainer.step_without_loss()?;
            continue;
        }
        let c = trainer.step()?;
        {
            if !trainer.is_finite() {
                return Err(HosgnsError::Divergence { iteration: c.iteration, lr: c.lr });
            }
            log::debug!("iteration {} loss {:.6} lr {:.5}", c.iteration, c.loss, c.lr);
            checkpoints.push(c);
        }
    }
    Ok(TrainResult { embeddings: trainer.embeddings(), checkpoints })
}

/// Trains factors for `tensor`, logging the sampled loss every `checkpoint_every` steps
/// and at the last step.
pub fn train(tensor: &CooccurrenceTensor, cfg: TrainConfig) -> Result<TrainResult, HosgnsError> {
    match cfg.precision {
        Precision::Single => run::<f32>(tensor, cfg),
        Precision::Double => run::<f64>(tensor, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooccurrence::ModeRole;
    use crate::hosgns::exact_loss;

    fn two_entry() -> CooccurrenceTensor {
        CooccurrenceTensor::from_weights(vec![2, 2, 2], ModeRole::defaults(3), [(vec![0, 1, 0], 1.0), (vec![1, 0, 1], 1.0)])
            .unwrap()
    }

    #[test]
    fn training_lowers_exact_loss() {
        let t = two_entry();
        let cfg = TrainConfig { dim: 4, batch: 64, iterations: 2000, seed: 3, ..TrainConfig::default() };
        let start = Trainer::<f64>::new(&t, cfg.clone()).unwrap();
        let before = exact_loss(&start.embeddings(), &t, cfg.kappa).unwrap().total;
        let after = exact_loss(&train(&t, cfg).unwrap().embeddings, &t, 5.0).unwrap().total;
        assert!(after < before, "{after} >= {before}");
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { kappa: 0.5, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { adam_beta2: 1.0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { negatives_per_positive: 0, ..TrainConfig::default() }.validate().is_err());
    }

    #[test]
    fn checkpoints_and_log() {
        let t = two_entry();
        let cfg = TrainConfig { dim: 2, batch: 8, iterations: 250, ..TrainConfig::default() };
        let r = train(&t, cfg).unwrap();
        let its: Vec<usize> = r.checkpoints.iter().map(|c| c.iteration).collect();
        assert_eq!(its, vec![0, 100, 200, 249]);
        let first = r.log_lines().lines().next().unwrap().to_owned();
        let v: serde_json::Value = serde_json::from_str(&first).unwrap();
        assert_eq!(v["iteration"], 0);
        assert!((v["lr"].as_f64().unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn divergence_is_reported() {
        let t = two_entry();
        let cfg = TrainConfig { dim: 2, batch: 8, iterations: 50, lr_start: 1e300, optimizer: Optimizer::Sgd, ..TrainConfig::default() };
        assert!(matches!(train(&t, cfg), Err(HosgnsError::Divergence { .. })));
    }
}

//! Higher-order skip-gram with negative sampling.
//!
//! Each observed index tuple is scored by the higher-order inner product of one row per
//! factor matrix, and the model learns to separate tuples drawn from the data tensor
//! from tuples drawn from the product of its marginals. At the optimum the scores equal
//! the shifted PMI of the tensor, so training performs an implicit CP decomposition.

mod analysis;
mod embedding;
mod kernel;
mod loss;
mod train;

use thiserror::Error;

pub use analysis::{pearson_r2, planted_cp_tensor, reconstruct_spmi, sgns_reduction_check, PlantedTensor, Reconstruction, SgnsReport};
pub use embedding::{ho_inner, EmbeddingSet, ExportMeta, Factor};
pub use kernel::{accumulate_gradient, accumulate_gradient_parallel, batch_loss, Batch, BatchLoss, Gradient, Real};
pub use loss::{
    exact_gradient, exact_loss, exact_loss_with_budget, log_sigmoid, loss_derivative, max_score_derivative, sigmoid,
    LossReport, EXACT_GRID_BUDGET,
};
pub use train::{train, Checkpoint, Optimizer, Precision, StreamSeeds, TrainConfig, TrainResult, Trainer};

#[derive(Debug, Error)]
pub enum HosgnsError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index grid of {grid} cells exceeds the budget of {budget}")]
    Resource { grid: u128, budget: u128 },
    #[error("training diverged at iteration {iteration} (learning rate {lr})")]
    Divergence { iteration: usize, lr: f64 },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("malformed embedding file: {0}")]
    Parse(String),
    #[error(transparent)]
    Tensor(#[from] crate::cooccurrence::TensorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

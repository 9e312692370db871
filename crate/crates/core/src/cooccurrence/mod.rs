//! Co-occurrence probability tensors of time-varying graphs and their shifted PMI.
//!
//! Three constructions are provided:
//!
//! * the snapshot tensor over `(node, context, time)`, proportional to event weights;
//! * the random-walk tensor over `(node, context, time, context-time)`, giving the
//!   windowed co-occurrence probability of two supra vertices under a stationary walk
//!   on the supra-adjacency graph;
//! * their average, where the snapshot entries sit on the `time == context-time` diagonal.
//!
//! Positive tuples are drawn from the tensor itself and negative tuples from the
//! product of its mode marginals.

mod construct;
mod deepwalk;
mod sampler;
mod tensor;

use thiserror::Error;

pub use construct::{dyn_tensor, dyn_tensor_sampled, dyn_tensor_with_budget, stat_tensor, statdyn_tensor, DEFAULT_ENTRY_BUDGET};
pub use deepwalk::{deepwalk_expected_pmi, deepwalk_pmi_matrix};
pub use sampler::{NegativeSampler, PositiveSampler};
pub use tensor::{CooccurrenceTensor, ModeRole, TensorMeta};

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid tensor: {0}")]
    Invalid(String),
    #[error("random-walk tensor needs more than {budget} entries; use the sampled estimator instead")]
    Resource { budget: usize },
    #[error(transparent)]
    Supra(#[from] crate::supra::SupraError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

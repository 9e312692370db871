//! Temporal network embeddings by implicit factorization of higher-order
//! co-occurrence tensors.
//!
//! The pipeline runs from raw contact lists to a [`temporal_graph::TimeVaryingGraph`],
//! through its [`supra`] graph and the [`cooccurrence`] tensors, to embeddings trained
//! with [`hosgns`] and scored by the downstream tasks in [`eval`].

pub mod cli;
pub mod cooccurrence;
pub mod eval;
pub mod hosgns;
pub mod seed;
pub mod supra;
pub mod temporal_graph;

//! Downstream evaluation: SIR state classification of active nodes and reconstruction
//! of events against sampled non-events, both scored by Macro-F1 on leakage-free splits.

mod features;
mod logreg;
mod protocol;
mod sir;
mod split;

pub use features::{combine, combine_into, feature_dim, OperatorTag, Target};
pub use logreg::{logreg_fit, logreg_predict, macro_f1, LogReg, LogRegConfig};
pub use protocol::{
    mean_std, run_classification, run_reconstruction, EvalReport, ProtocolConfig, ReportParams, ReportSeeds, Task,
};
pub use sir::{sir_simulate, sir_simulate_surviving, SirConfig, SirState, SirTrajectory};
pub use split::{make_split, negative_events, SplitSpec};

/// Transmission rule recorded next to `beta` in reports.
pub const INFECTION_CONVENTION: &str = "per event: 1 - (1 - beta)^weight";

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("only {available} candidate non-events for {needed} events")]
    Infeasible { needed: usize, available: usize },
}

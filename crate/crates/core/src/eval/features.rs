use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::cooccurrence::ModeRole;
use crate::hosgns::EmbeddingSet;

/// Rule for merging factor rows into one feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorTag {
    Average,
    Hadamard,
    WeightedL1,
    WeightedL2,
    Concat,
}

impl OperatorTag {
    pub const ALL: [OperatorTag; 5] =
        [Self::Average, Self::Hadamard, Self::WeightedL1, Self::WeightedL2, Self::Concat];

    pub fn name(self) -> &'static str {
        match self {
            Self::Average => "average",
            Self::Hadamard => "hadamard",
            Self::WeightedL1 => "weighted_l1",
            Self::WeightedL2 => "weighted_l2",
            Self::Concat => "concat",
        }
    }
}

impl std::str::FromStr for OperatorTag {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|op| op.name() == s).ok_or_else(|| {
            let valid: Vec<&str> = Self::ALL.iter().map(|op| op.name()).collect();
            EvalError::Config(format!("unknown operator '{s}'; valid operators: {}", valid.join(", ")))
        })
    }
}

/// Instance being represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// Node `i` at slice `k`.
    Node { i: usize, k: usize },
    /// Event between `i` and `j` at slice `k`.
    Event { i: usize, j: usize, k: usize },
}

/// Width of the feature vectors `combine` produces.
pub fn feature_dim(op: OperatorTag, e: &EmbeddingSet, node_task: bool) -> usize {
    match (op, node_task) {
        (OperatorTag::Concat, true) => 2 * e.dim(),
        (OperatorTag::Concat, false) => 3 * e.dim(),
        _ => e.dim(),
    }
}

fn factor_row<'e>(e: &'e EmbeddingSet, role: ModeRole, i: usize) -> Result<&'e [f64], EvalError> {
    let f = e
        .by_role(role)
        .ok_or_else(|| EvalError::Config(format!("embeddings lack a {} factor", role.factor_name())))?;
    if i >= f.rows() {
        return Err(EvalError::Config(format!("row {i} outside the {} factor", role.factor_name())));
    }
    Ok(f.row(i))
}

fn zip_into(out: &mut Vec<f64>, rows: &[&[f64]], f: impl Fn(&[f64]) -> f64) {
    let mut column = vec![0.0; rows.len()];
    for r in 0..rows[0].len() {
        for (c, row) in column.iter_mut().zip(rows) {
            *c = row[r];
        }
        out.push(f(&column));
    }
}

/// Appends the feature vector of `target` to `out`.
///
/// Node targets use `w_i` and `t_k`, with the Hadamard product adding `c_i` for order-3
/// embeddings. Event targets use `w_i`, `c_j` and `t_k`, with the Hadamard product adding
/// `s_k` for order-4 embeddings.
pub fn combine_into(op: OperatorTag, e: &EmbeddingSet, target: Target, out: &mut Vec<f64>) -> Result<(), EvalError> {
    let order = e.order();
    match target {
        Target::Node { i, k } => {
            let (w, t) = (factor_row(e, ModeRole::Node, i)?, factor_row(e, ModeRole::Time, k)?);
            match op {
                OperatorTag::Average => zip_into(out, &[w, t], |v| 0.5 * (v[0] + v[1])),
                OperatorTag::Hadamard if order == 3 => {
                    let c = factor_row(e, ModeRole::Context, i)?;
                    zip_into(out, &[w, c, t], |v| v[0] * v[1] * v[2]);
                }
                OperatorTag::Hadamard => zip_into(out, &[w, t], |v| v[0] * v[1]),
                OperatorTag::WeightedL1 => zip_into(out, &[w, t], |v| (v[0] - v[1]).abs()),
                OperatorTag::WeightedL2 => zip_into(out, &[w, t], |v| (v[0] - v[1]).powi(2)),
                OperatorTag::Concat => {
                    out.extend_from_slice(w);
                    out.extend_from_slice(t);
                }
            }
        }
        Target::Event { i, j, k } => {
            let w = factor_row(e, ModeRole::Node, i)?;
            let c = factor_row(e, ModeRole::Context, j)?;
            let t = factor_row(e, ModeRole::Time, k)?;
            let rows = [w, c, t];
            match op {
                OperatorTag::Average => zip_into(out, &rows, |v| (v[0] + v[1] + v[2]) / 3.0),
                OperatorTag::Hadamard if order == 4 => {
                    let s = factor_row(e, ModeRole::ContextTime, k)?;
                    zip_into(out, &[w, c, t, s], |v| v[0] * v[1] * v[2] * v[3]);
                }
                OperatorTag::Hadamard => zip_into(out, &rows, |v| v[0] * v[1] * v[2]),
                OperatorTag::WeightedL1 => zip_into(out, &rows, |v| {
                    ((v[0] - v[2]).abs() + (v[0] - v[1]).abs() + (v[1] - v[2]).abs()) / 3.0
                }),
                OperatorTag::WeightedL2 => zip_into(out, &rows, |v| {
                    ((v[0] - v[2]).powi(2) + (v[0] - v[1]).powi(2) + (v[1] - v[2]).powi(2)) / 3.0
                }),
                OperatorTag::Concat => rows.iter().for_each(|r| out.extend_from_slice(r)),
            }
        }
    }
    Ok(())
}

pub fn combine(op: OperatorTag, e: &EmbeddingSet, target: Target) -> Result<Vec<f64>, EvalError> {
    let mut out = Vec::new();
    combine_into(op, e, target, &mut out)?;
    Ok(out)
}

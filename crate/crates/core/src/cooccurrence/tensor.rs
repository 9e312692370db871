use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::TensorError;

/// Semantic role of a tensor mode, which also names the factor learned for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeRole {
    Node,
    Context,
    Time,
    ContextTime,
}

impl ModeRole {
    /// Single-letter factor name: W, C, T or S.
    pub fn factor_name(self) -> &'static str {
        match self {
            ModeRole::Node => "W",
            ModeRole::Context => "C",
            ModeRole::Time => "T",
            ModeRole::ContextTime => "S",
        }
    }

    pub fn from_factor_name(s: &str) -> Option<Self> {
        match s {
            "W" => Some(ModeRole::Node),
            "C" => Some(ModeRole::Context),
            "T" => Some(ModeRole::Time),
            "S" => Some(ModeRole::ContextTime),
            _ => None,
        }
    }

    /// Default roles for a tensor of the given order.
    pub fn defaults(order: usize) -> Vec<ModeRole> {
        [ModeRole::Node, ModeRole::Context, ModeRole::Time, ModeRole::ContextTime]
            .into_iter()
            .chain(std::iter::repeat(ModeRole::ContextTime))
            .take(order)
            .collect()
    }
}

/// Sparse probability tensor with cached mode marginals.
///
/// Entries are keyed by their row-major linear index and kept sorted; only strictly
/// positive probabilities are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceTensor {
    mode_sizes: Vec<usize>,
    strides: Vec<u64>,
    roles: Vec<ModeRole>,
    keys: Vec<u64>,
    values: Vec<f64>,
    marginals: Vec<Vec<f64>>,
}

/// Sidecar metadata for the COO export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorMeta {
    pub order: usize,
    pub mode_sizes: Vec<usize>,
    pub roles: Vec<ModeRole>,
}

pub(crate) fn strides_for(mode_sizes: &[usize]) -> Result<Vec<u64>, TensorError> {
    let mut strides = vec![1u64; mode_sizes.len()];
    let mut acc: u64 = 1;
    for n in (0..mode_sizes.len()).rev() {
        strides[n] = acc;
        acc = acc
            .checked_mul(mode_sizes[n] as u64)
            .ok_or_else(|| TensorError::Shape("index space exceeds 64 bits".into()))?;
    }
    Ok(strides)
}

impl CooccurrenceTensor {
    /// Builds a tensor from non-negative weights, normalising them to sum to one.
    ///
    /// Repeated coordinates accumulate; zero weights are dropped.
    pub fn from_weights<I>(mode_sizes: Vec<usize>, roles: Vec<ModeRole>, entries: I) -> Result<Self, TensorError>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        let strides = strides_for(&mode_sizes)?;
        let mut keyed = Vec::new();
        for (idx, w) in entries {
            check_index(&mode_sizes, &idx)?;
            if !(w.is_finite() && w >= 0.0) {
                return Err(TensorError::Invalid(format!("weight {w} at {idx:?}")));
            }
            keyed.push((encode_with(&strides, &idx), w));
        }
        Self::from_keyed(mode_sizes, roles, keyed, true)
    }

    /// Builds a tensor from `(linear key, weight)` pairs.
    pub(crate) fn from_keyed(
        mode_sizes: Vec<usize>,
        roles: Vec<ModeRole>,
        mut keyed: Vec<(u64, f64)>,
        normalize: bool,
    ) -> Result<Self, TensorError> {
        if roles.len() != mode_sizes.len() || mode_sizes.is_empty() {
            return Err(TensorError::Shape(format!(
                "{} roles for {} modes",
                roles.len(),
                mode_sizes.len()
            )));
        }
        if mode_sizes.iter().any(|&m| m == 0) {
            return Err(TensorError::Shape("empty mode".into()));
        }
        let strides = strides_for(&mode_sizes)?;
        keyed.sort_unstable_by_key(|&(k, _)| k);
        let mut keys: Vec<u64> = Vec::with_capacity(keyed.len());
        let mut values: Vec<f64> = Vec::with_capacity(keyed.len());
        for (k, v) in keyed {
            if keys.last() == Some(&k) {
                *values.last_mut().expect("paired with keys") += v;
            } else {
                keys.push(k);
                values.push(v);
            }
        }
        let (keys, mut values): (Vec<u64>, Vec<f64>) =
            keys.into_iter().zip(values).filter(|&(_, v)| v > 0.0).unzip();
        let total: f64 = values.iter().sum();
        if keys.is_empty() || total <= 0.0 {
            return Err(TensorError::Invalid("tensor has no positive entries".into()));
        }
        if normalize {
            values.iter_mut().for_each(|v| *v /= total);
        } else if (total - 1.0).abs() > 1e-9 {
            return Err(TensorError::Invalid(format!("entries sum to {total}, expected 1")));
        }
        let mut t = Self { mode_sizes, strides, roles, keys, values, marginals: Vec::new() };
        t.marginals = t.compute_marginals();
        Ok(t)
    }

    fn compute_marginals(&self) -> Vec<Vec<f64>> {
        let mut m: Vec<Vec<f64>> = self.mode_sizes.iter().map(|&s| vec![0.0; s]).collect();
        for (&k, &v) in self.keys.iter().zip(&self.values) {
            for (n, marg) in m.iter_mut().enumerate() {
                let i = (k / self.strides[n]) as usize % self.mode_sizes[n];
                marg[i] += v;
            }
        }
        m
    }

    pub fn order(&self) -> usize {
        self.mode_sizes.len()
    }

    pub fn mode_sizes(&self) -> &[usize] {
        &self.mode_sizes
    }

    pub fn roles(&self) -> &[ModeRole] {
        &self.roles
    }

    pub fn nnz(&self) -> usize {
        self.keys.len()
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Total number of grid cells.
    pub fn grid_size(&self) -> u128 {
        self.mode_sizes.iter().map(|&m| m as u128).product()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn marginal(&self, mode: usize) -> &[f64] {
        &self.marginals[mode]
    }

    pub fn marginals(&self) -> &[Vec<f64>] {
        &self.marginals
    }

    pub fn encode(&self, idx: &[usize]) -> u64 {
        encode_with(&self.strides, idx)
    }

    pub fn decode_into(&self, key: u64, out: &mut [usize]) {
        for (n, o) in out.iter_mut().enumerate() {
            *o = (key / self.strides[n]) as usize % self.mode_sizes[n];
        }
    }

    pub fn decode(&self, key: u64) -> Vec<usize> {
        let mut out = vec![0; self.order()];
        self.decode_into(key, &mut out);
        out
    }

    /// `P_D(idx)`, zero off the support.
    pub fn get(&self, idx: &[usize]) -> f64 {
        if check_index(&self.mode_sizes, idx).is_err() {
            return 0.0;
        }
        let k = self.encode(idx);
        self.keys.binary_search(&k).map(|p| self.values[p]).unwrap_or(0.0)
    }

    /// Product of mode marginals, the noise probability `P_N(idx)`.
    pub fn noise(&self, idx: &[usize]) -> f64 {
        idx.iter().enumerate().map(|(n, &i)| self.marginals[n][i]).product()
    }

    /// Stored entries as `(coordinates, probability)`.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.keys.iter().zip(&self.values).map(|(&k, &v)| (self.decode(k), v))
    }

    /// Shifted PMI `log(P_D / P_N) - log(kappa)`; `-inf` off the support.
    pub fn spmi(&self, idx: &[usize], kappa: f64) -> Result<f64, TensorError> {
        check_index(&self.mode_sizes, idx)?;
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(TensorError::Domain(format!("kappa {kappa} must be positive")));
        }
        if let Some((n, _)) = idx.iter().enumerate().find(|&(n, &i)| self.marginals[n][i] == 0.0) {
            return Err(TensorError::Domain(format!("index {idx:?} has zero marginal in mode {n}")));
        }
        let p = self.get(idx);
        if p == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok((p / self.noise(idx)).ln() - kappa.ln())
    }

    pub fn meta(&self) -> TensorMeta {
        TensorMeta { order: self.order(), mode_sizes: self.mode_sizes.clone(), roles: self.roles.clone() }
    }

    /// Writes one `idx_0 ... idx_{N-1} value` line per stored entry.
    pub fn write_coo<W: Write>(&self, mut out: W) -> Result<(), TensorError> {
        let mut idx = vec![0; self.order()];
        for (&k, &v) in self.keys.iter().zip(&self.values) {
            self.decode_into(k, &mut idx);
            for i in &idx {
                write!(out, "{i} ")?;
            }
            writeln!(out, "{v}")?;
        }
        Ok(())
    }

    /// Reads a COO export back, given its sidecar.
    pub fn read_coo<R: BufRead>(meta: &TensorMeta, reader: R) -> Result<Self, TensorError> {
        if meta.order != meta.mode_sizes.len() {
            return Err(TensorError::Shape("sidecar order mismatch".into()));
        }
        let mut entries = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != meta.order + 1 {
                return Err(TensorError::Invalid(format!("line {}: expected {} fields", n + 1, meta.order + 1)));
            }
            let idx = fields[..meta.order]
                .iter()
                .map(|f| f.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| TensorError::Invalid(format!("line {}: {e}", n + 1)))?;
            let v: f64 = fields[meta.order]
                .parse()
                .map_err(|e| TensorError::Invalid(format!("line {}: {e}", n + 1)))?;
            entries.push((idx, v));
        }
        let strides = strides_for(&meta.mode_sizes)?;
        let mut keyed = Vec::with_capacity(entries.len());
        for (idx, v) in entries {
            check_index(&meta.mode_sizes, &idx)?;
            keyed.push((encode_with(&strides, &idx), v));
        }
        Self::from_keyed(meta.mode_sizes.clone(), meta.roles.clone(), keyed, false)
    }
}

fn encode_with(strides: &[u64], idx: &[usize]) -> u64 {
    idx.iter().zip(strides).map(|(&i, &s)| i as u64 * s).sum()
}

pub(crate) fn check_index(mode_sizes: &[usize], idx: &[usize]) -> Result<(), TensorError> {
    if idx.len() != mode_sizes.len() {
        return Err(TensorError::Shape(format!("index of order {} for order-{} tensor", idx.len(), mode_sizes.len())));
    }
    if let Some((n, _)) = idx.iter().zip(mode_sizes).enumerate().find(|(_, (&i, &m))| i >= m) {
        return Err(TensorError::Domain(format!("index {idx:?} out of range in mode {n}")));
    }
    Ok(())
}

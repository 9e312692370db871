use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng as _;

use super::HosgnsError;
use crate::cooccurrence::ModeRole;
use crate::seed::Rng;

/// One factor matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    role: ModeRole,
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Factor {
    pub fn new(role: ModeRole, rows: usize, dim: usize, data: Vec<f64>) -> Result<Self, HosgnsError> {
        if data.len() != rows * dim {
            return Err(HosgnsError::Dimension(format!("{} values for a {rows}x{dim} factor", data.len())));
        }
        Ok(Self { role, rows, dim, data })
    }

    pub fn role(&self) -> ModeRole {
        self.role
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Factor matrices `A^(1), ..., A^(N)` sharing the embedding dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    factors: Vec<Factor>,
}

/// Header fields of an exported factor file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExportMeta {
    pub kappa: f64,
    pub seed: u64,
}

impl EmbeddingSet {
    pub fn from_factors(factors: Vec<Factor>) -> Result<Self, HosgnsError> {
        let dim = factors.first().map(|f| f.dim).ok_or_else(|| HosgnsError::Dimension("no factors".into()))?;
        if dim == 0 || factors.iter().any(|f| f.dim != dim) {
            return Err(HosgnsError::Dimension("factors disagree on a positive dimension".into()));
        }
        Ok(Self { dim, factors })
    }

    pub fn zeros(mode_sizes: &[usize], roles: &[ModeRole], dim: usize) -> Result<Self, HosgnsError> {
        Self::filled(mode_sizes, roles, dim, |_| 0.0)
    }

    /// Entries drawn uniformly from `[-scale/dim, scale/dim]`.
    pub fn uniform(mode_sizes: &[usize], roles: &[ModeRole], dim: usize, scale: f64, rng: &mut Rng) -> Result<Self, HosgnsError> {
        let half = scale / dim.max(1) as f64;
        Self::filled(mode_sizes, roles, dim, |_| rng.random_range(-half..=half))
    }

    fn filled(
        mode_sizes: &[usize],
        roles: &[ModeRole],
        dim: usize,
        mut fill: impl FnMut(usize) -> f64,
    ) -> Result<Self, HosgnsError> {
        if mode_sizes.len() != roles.len() {
            return Err(HosgnsError::Dimension(format!("{} roles for {} modes", roles.len(), mode_sizes.len())));
        }
        let factors = mode_sizes
            .iter()
            .zip(roles)
            .map(|(&rows, &role)| Factor { role, rows, dim, data: (0..rows * dim).map(&mut fill).collect() })
            .collect();
        Self::from_factors(factors)
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.rows).collect()
    }

    pub fn roles(&self) -> Vec<ModeRole> {
        self.factors.iter().map(|f| f.role).collect()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factors_mut(&mut self) -> &mut [Factor] {
        &mut self.factors
    }

    pub fn factor(&self, n: usize) -> &Factor {
        &self.factors[n]
    }

    pub fn by_role(&self, role: ModeRole) -> Option<&Factor> {
        self.factors.iter().find(|f| f.role == role)
    }

    /// Higher-order inner product of the rows selected by `idx`.
    pub fn inner(&self, idx: &[usize]) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.dim {
            acc += self.factors.iter().zip(idx).map(|(f, &i)| f.data[i * self.dim + r]).product::<f64>();
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.factors.iter().all(|f| f.data.iter().all(|x| x.is_finite()))
    }

    /// Writes factor `n` as TSV: a `#role dim=d kappa=k seed=s` header, then one row per
    /// vocabulary index holding the index and its `d` values.
    pub fn write_factor_tsv<W: Write>(&self, n: usize, meta: ExportMeta, mut out: W) -> Result<(), HosgnsError> {
        let f = &self.factors[n];
        writeln!(out, "#{} dim={} kappa={} seed={}", f.role.factor_name(), self.dim, meta.kappa, meta.seed)?;
        let mut line = String::new();
        for i in 0..f.rows {
            line.clear();
            write!(line, "{i}").expect("write to string");
            for x in f.row(i) {
                write!(line, "\t{x}").expect("write to string");
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Reads one factor written by [`EmbeddingSet::write_factor_tsv`].
    pub fn read_factor_tsv<R: BufRead>(reader: R) -> Result<(Factor, ExportMeta), HosgnsError> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| HosgnsError::Parse("empty factor file".into()))??;
        let mut parts = header
            .strip_prefix('#')
            .ok_or_else(|| HosgnsError::Parse("missing header".into()))?
            .split_whitespace();
        let role = parts
            .next()
            .and_then(ModeRole::from_factor_name)
            .ok_or_else(|| HosgnsError::Parse(format!("bad role in header '{header}'")))?;
        let mut field = |key: &str| -> Result<String, HosgnsError> {
            parts
                .next()
                .and_then(|p| p.strip_prefix(key))
                .map(str::to_owned)
                .ok_or_else(|| HosgnsError::Parse(format!("header lacks '{key}'")))
        };
        let parse_err = |e: &dyn std::fmt::Display| HosgnsError::Parse(e.to_string());
        let dim: usize = field("dim=")?.parse().map_err(|e| parse_err(&e))?;
        let kappa: f64 = field("kappa=")?.parse().map_err(|e| parse_err(&e))?;
        let seed: u64 = field("seed=")?.parse().map_err(|e| parse_err(&e))?;
        let mut data = Vec::new();
        let mut rows = 0;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let idx: usize = fields.next().unwrap_or("").parse().map_err(|e| parse_err(&e))?;
            if idx != rows {
                return Err(HosgnsError::Parse(format!("row {idx} out of order")));
            }
            let before = data.len();
            for x in fields {
                data.push(x.parse::<f64>().map_err(|e| parse_err(&e))?);
            }
            if data.len() - before != dim {
                return Err(HosgnsError::Parse(format!("row {idx} has {} values", data.len() - before)));
            }
            rows += 1;
        }
        Ok((Factor::new(role, rows, dim, data)?, ExportMeta { kappa, seed }))
    }
}

/// `sum_r prod_n vectors[n][r]`.
pub fn ho_inner(vectors: &[&[f64]]) -> Result<f64, HosgnsError> {
    let d = vectors.first().map_or(0, |v| v.len());
    if vectors.iter().any(|v| v.len() != d) {
        return Err(HosgnsError::Dimension("vectors differ in length".into()));
    }
    Ok((0..d).map(|r| vectors.iter().map(|v| v[r]).product::<f64>()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn ho_inner_examples() {
        let ones = [1.0; 4];
        assert_eq!(ho_inner(&[&ones, &ones, &ones]).unwrap(), 4.0);
        assert_eq!(ho_inner(&[&ones, &[0.0; 4], &ones]).unwrap(), 0.0);
        assert!(ho_inner(&[&ones, &[1.0; 3]]).is_err());
        let a = [0.3, -1.2, 2.0];
        let b = [1.5, 0.25, -0.5];
        assert!((ho_inner(&[&a, &b]).unwrap() - (0.45 - 0.3 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn uniform_init_respects_scale() {
        let mut rng = seed::rng(3);
        let e = EmbeddingSet::uniform(&[5, 6, 7], &ModeRole::defaults(3), 8, 0.5, &mut rng).unwrap();
        assert!(e.factors().iter().all(|f| f.data().iter().all(|x| x.abs() <= 0.5 / 8.0)));
        assert_eq!(e.mode_sizes(), vec![5, 6, 7]);
    }

    #[test]
    fn tsv_round_trip() {
        let mut rng = seed::rng(9);
        let e = EmbeddingSet::uniform(&[3, 2], &ModeRole::defaults(2), 4, 0.5, &mut rng).unwrap();
        let meta = ExportMeta { kappa: 5.0, seed: 9 };
        let mut buf = Vec::new();
        e.write_factor_tsv(1, meta, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("#C dim=4 kappa=5 seed=9\n0\t"));
        let (f, m) = EmbeddingSet::read_factor_tsv(buf.as_slice()).unwrap();
        assert_eq!(&f, e.factor(1));
        assert_eq!(m, meta);
    }
}

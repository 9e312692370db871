use rand::seq::index;

use super::embedding::EmbeddingSet;
use super::train::{train, TrainConfig};
use super::HosgnsError;
use crate::cooccurrence::{CooccurrenceTensor, ModeRole, TensorError};
use crate::seed;

/// Squared Pearson correlation; `NaN` when either side is constant.
pub fn pearson_r2(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / n, b + y / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy * sxy / (sxx * syy)
}

/// Paired `(SPMI, model score)` values over support entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub pairs: Vec<(f64, f64)>,
    pub r2: f64,
    pub max_abs_error: f64,
}

/// Compares model scores with the shifted PMI on a uniform sample of at most
/// `max_samples` support entries.
pub fn reconstruct_spmi(
    e: &EmbeddingSet,
    t: &CooccurrenceTensor,
    kappa: f64,
    max_samples: usize,
    sample_seed: u64,
) -> Result<Reconstruction, HosgnsError> {
    if e.mode_sizes() != t.mode_sizes() {
        return Err(HosgnsError::Dimension("embeddings do not match the tensor".into()));
    }
    let positions: Vec<usize> = if t.nnz() <= max_samples {
        (0..t.nnz()).collect()
    } else {
        let mut picked = index::sample(&mut seed::rng(sample_seed), t.nnz(), max_samples).into_vec();
        picked.sort_unstable();
        picked
    };
    let mut idx = vec![0; t.order()];
    let mut pairs = Vec::with_capacity(positions.len());
    for p in positions {
        t.decode_into(t.keys()[p], &mut idx);
        pairs.push((t.spmi(&idx, kappa)?, e.inner(&idx)));
    }
    let max_abs_error = pairs.iter().map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(Reconstruction { r2: pearson_r2(&pairs), pairs, max_abs_error })
}

/// Outcome of training a pair model against its exact shifted PMI matrix.
#[derive(Debug, Clone)]
pub struct SgnsReport {
    pub max_abs_error: f64,
    pub r2: f64,
    pub embeddings: EmbeddingSet,
}

/// Trains on an order-2 tensor and compares `W C^T` with the shifted PMI matrix on its support.
pub fn sgns_reduction_check(t: &CooccurrenceTensor, cfg: TrainConfig) -> Result<SgnsReport, HosgnsError> {
    if t.order() != 2 {
        return Err(HosgnsError::Dimension(format!("expected a pair tensor, got order {}", t.order())));
    }
    let kappa = cfg.kappa;
    let result = train(t, cfg)?;
    let rec = reconstruct_spmi(&result.embeddings, t, kappa, usize::MAX, 0)?;
    Ok(SgnsReport { max_abs_error: rec.max_abs_error, r2: rec.r2, embeddings: result.embeddings })
}

/// Full-support tensor whose unshifted PMI is `lambda * prod_n s_n(i_n) - log Z`, a CP
/// tensor of rank two.
#[derive(Debug, Clone)]
pub struct PlantedTensor {
    pub tensor: CooccurrenceTensor,
    pub signs: Vec<Vec<f64>>,
    pub lambda: f64,
    pub log_z: f64,
}

impl PlantedTensor {
    pub fn pmi(&self, idx: &[usize]) -> f64 {
        self.lambda * self.signs.iter().zip(idx).map(|(s, &i)| s[i]).product::<f64>() - self.log_z
    }

    /// Fixture with modes of sizes 4, 4 and 5.
    pub fn standard(lambda: f64) -> Result<Self, HosgnsError> {
        planted_cp_tensor(
            vec![vec![1.0, -1.0, 1.0, -1.0], vec![1.0, 1.0, -1.0, -1.0], vec![1.0, -1.0, 1.0, -1.0, 1.0]],
            vec![
                vec![0.1, 0.3, 0.4, 0.2],
                vec![0.15, 0.35, 0.2, 0.3],
                vec![0.1, 0.25, 0.2, 0.15, 0.3],
            ],
            lambda,
        )
    }
}

/// Builds `P(idx) ∝ prod_n w_n(i_n) exp(lambda prod_n s_n(i_n))` from sign vectors `s_n`
/// and mode weights `w_n`.
///
/// The weights are the marginals of the result only when, for every mode, the product of
/// the other modes' signs is symmetric under the other modes' weights; this is checked,
/// and it is what makes the PMI exactly rank two.
pub fn planted_cp_tensor(signs: Vec<Vec<f64>>, weights: Vec<Vec<f64>>, lambda: f64) -> Result<PlantedTensor, HosgnsError> {
    let sizes: Vec<usize> = signs.iter().map(Vec::len).collect();
    if weights.iter().map(Vec::len).ne(sizes.iter().copied()) || !(2..=4).contains(&sizes.len()) {
        return Err(HosgnsError::Dimension("signs and weights must agree on 2 to 4 modes".into()));
    }
    if signs.iter().flatten().any(|s| s.abs() != 1.0) || weights.iter().flatten().any(|&w| !(w > 0.0)) {
        return Err(HosgnsError::Config("signs must be +-1 and weights positive".into()));
    }
    let weights: Vec<Vec<f64>> =
        weights.into_iter().map(|w| { let s: f64 = w.iter().sum(); w.into_iter().map(|x| x / s).collect() }).collect();
    let grid: usize = sizes.iter().product();
    let mut cells = Vec::with_capacity(grid);
    let mut idx = vec![0usize; sizes.len()];
    for _ in 0..grid {
        let w: f64 = weights.iter().zip(&idx).map(|(w, &i)| w[i]).product();
        let s: f64 = signs.iter().zip(&idx).map(|(s, &i)| s[i]).product();
        cells.push((idx.clone(), w * (lambda * s).exp()));
        for n in (0..idx.len()).rev() {
            idx[n] += 1;
            if idx[n] < sizes[n] {
                break;
            }
            idx[n] = 0;
        }
    }
    let z: f64 = cells.iter().map(|(_, v)| v).sum();
    let tensor = CooccurrenceTensor::from_weights(sizes.clone(), ModeRole::defaults(sizes.len()), cells)?;
    for (n, w) in weights.iter().enumerate() {
        if tensor.marginal(n).iter().zip(w).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(HosgnsError::Tensor(TensorError::Invalid(format!("mode {n} signs are not balanced"))));
        }
    }
    Ok(PlantedTensor { tensor, signs, lambda, log_z: z.ln() })
}

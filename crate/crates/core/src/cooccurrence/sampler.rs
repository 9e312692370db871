use rand::distr::Distribution;
use rand_distr::weighted::WeightedAliasIndex;

use super::tensor::CooccurrenceTensor;
use super::TensorError;
use crate::seed::{self, Rng};

/// Draws index tuples with probability `P_D`, in O(1) per draw.
pub struct PositiveSampler<'a> {
    tensor: &'a CooccurrenceTensor,
    alias: WeightedAliasIndex<f64>,
    rng: Rng,
}

impl<'a> PositiveSampler<'a> {
    pub fn new(tensor: &'a CooccurrenceTensor, seed: u64) -> Result<Self, TensorError> {
        let alias = WeightedAliasIndex::new(tensor.values().to_vec())
            .map_err(|e| TensorError::Invalid(format!("positive sampler: {e}")))?;
        Ok(Self { tensor, alias, rng: seed::rng(seed) })
    }

    pub fn sample_into(&mut self, out: &mut [usize]) {
        let pos = self.alias.sample(&mut self.rng);
        self.tensor.decode_into(self.tensor.keys()[pos], out);
    }

    pub fn sample(&mut self) -> Vec<usize> {
        let mut out = vec![0; self.tensor.order()];
        self.sample_into(&mut out);
        out
    }
}

/// Draws index tuples from the product of mode marginals `P_N`.
pub struct NegativeSampler {
    modes: Vec<WeightedAliasIndex<f64>>,
    rng: Rng,
}

impl NegativeSampler {
    pub fn new(tensor: &CooccurrenceTensor, seed: u64) -> Result<Self, TensorError> {
        let modes = tensor
            .marginals()
            .iter()
            .map(|m| {
                WeightedAliasIndex::new(m.clone()).map_err(|e| TensorError::Invalid(format!("negative sampler: {e}")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { modes, rng: seed::rng(seed) })
    }

    pub fn sample_into(&mut self, out: &mut [usize]) {
        for (o, m) in out.iter_mut().zip(&self.modes) {
            *o = m.sample(&mut self.rng);
        }
    }

    /// Keeps the mode-0 index of `out` and redraws every other mode.
    pub fn corrupt(&mut self, out: &mut [usize]) {
        for (o, m) in out.iter_mut().zip(&self.modes).skip(1) {
            *o = m.sample(&mut self.rng);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooccurrence::ModeRole;

    fn tensor() -> CooccurrenceTensor {
        CooccurrenceTensor::from_weights(
            vec![2, 3],
            ModeRole::defaults(2),
            [(vec![0, 0], 1.0), (vec![0, 2], 2.0), (vec![1, 1], 3.0), (vec![1, 2], 4.0)],
        )
        .unwrap()
    }

    #[test]
    fn positive_frequencies_match_probabilities() {
        let t = tensor();
        let mut s = PositiveSampler::new(&t, 11).unwrap();
        let n = 200_000;
        let mut counts = [[0usize; 3]; 2];
        for _ in 0..n {
            let x = s.sample();
            counts[x[0]][x[1]] += 1;
        }
        for (i, row) in counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                let p = t.get(&[i, j]);
                let sd = (p * (1.0 - p) / n as f64).sqrt();
                assert!((c as f64 / n as f64 - p).abs() <= 5.0 * sd + 1e-12, "{i} {j}");
            }
        }
    }

    #[test]
    fn negatives_follow_marginals_and_keep_anchor() {
        let t = tensor();
        let mut s = NegativeSampler::new(&t, 5).unwrap();
        let n = 200_000;
        let mut counts = [0usize; 3];
        let mut x = [1usize, 0];
        for _ in 0..n {
            s.corrupt(&mut x);
            assert_eq!(x[0], 1);
            counts[x[1]] += 1;
        }
        for (j, &c) in counts.iter().enumerate() {
            let p = t.marginal(1)[j];
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((c as f64 / n as f64 - p).abs() <= 5.0 * sd);
        }
    }
}

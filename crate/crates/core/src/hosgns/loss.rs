use serde::{Deserialize, Serialize};

use super::embedding::EmbeddingSet;
use super::kernel::Gradient;
use super::HosgnsError;
use crate::cooccurrence::CooccurrenceTensor;

/// Grid cells the exact loss will visit before refusing.
pub const EXACT_GRID_BUDGET: u128 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub iteration: usize,
    pub positive_term: f64,
    pub negative_term: f64,
    pub total: f64,
}

impl LossReport {
    pub fn new(iteration: usize, positive_term: f64, negative_term: f64) -> Self {
        Self { iteration, positive_term, negative_term, total: positive_term + negative_term }
    }
}

/// `log(sigmoid(x))` without overflow.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Derivative of the exact loss with respect to the model score `m` of one cell.
pub fn loss_derivative(p_data: f64, p_noise: f64, kappa: f64, m: f64) -> f64 {
    (p_data + kappa * p_noise) * sigmoid(m) - p_data
}

fn check_shapes(e: &EmbeddingSet, t: &CooccurrenceTensor) -> Result<(), HosgnsError> {
    if e.mode_sizes() != t.mode_sizes() {
        return Err(HosgnsError::Dimension(format!(
            "embedding modes {:?} do not match tensor modes {:?}",
            e.mode_sizes(),
            t.mode_sizes()
        )));
    }
    Ok(())
}

/// Visits every grid cell in row-major order with its data and noise probabilities.
fn for_each_cell(
    t: &CooccurrenceTensor,
    budget: u128,
    mut visit: impl FnMut(&[usize], f64, f64),
) -> Result<(), HosgnsError> {
    let grid = t.grid_size();
    if grid > budget {
        return Err(HosgnsError::Resource { grid, budget });
    }
    let sizes = t.mode_sizes();
    let margs = t.marginals();
    let (keys, values) = (t.keys(), t.values());
    let mut idx = vec![0usize; sizes.len()];
    let mut next = 0usize;
    for key in 0..grid as u64 {
        let p_data = if next < keys.len() && keys[next] == key {
            next += 1;
            values[next - 1]
        } else {
            0.0
        };
        let p_noise: f64 = idx.iter().enumerate().map(|(n, &i)| margs[n][i]).product();
        visit(&idx, p_data, p_noise);
        for n in (0..idx.len()).rev() {
            idx[n] += 1;
            if idx[n] < sizes[n] {
                break;
            }
            idx[n] = 0;
        }
    }
    Ok(())
}

/// Exact loss `-sum [P_D log s(m) + kappa P_N log s(-m)]` over the full index grid.
pub fn exact_loss(e: &EmbeddingSet, t: &CooccurrenceTensor, kappa: f64) -> Result<LossReport, HosgnsError> {
    exact_loss_with_budget(e, t, kappa, EXACT_GRID_BUDGET)
}

pub fn exact_loss_with_budget(
    e: &EmbeddingSet,
    t: &CooccurrenceTensor,
    kappa: f64,
    budget: u128,
) -> Result<LossReport, HosgnsError> {
    check_shapes(e, t)?;
    let (mut pos, mut neg) = (0.0, 0.0);
    for_each_cell(t, budget, |idx, p_data, p_noise| {
        let m = e.inner(idx);
        if p_data > 0.0 {
            pos -= p_data * log_sigmoid(m);
        }
        neg -= kappa * p_noise * log_sigmoid(-m);
    })?;
    Ok(LossReport::new(0, pos, neg))
}

/// Largest `|dL/dm|` over the grid.
pub fn max_score_derivative(e: &EmbeddingSet, t: &CooccurrenceTensor, kappa: f64) -> Result<f64, HosgnsError> {
    check_shapes(e, t)?;
    let mut worst: f64 = 0.0;
    for_each_cell(t, EXACT_GRID_BUDGET, |idx, p_data, p_noise| {
        worst = worst.max(loss_derivative(p_data, p_noise, kappa, e.inner(idx)).abs());
    })?;
    Ok(worst)
}

/// Gradient of the exact loss with respect to every factor entry.
pub fn exact_gradient(e: &EmbeddingSet, t: &CooccurrenceTensor, kappa: f64) -> Result<Gradient, HosgnsError> {
    check_shapes(e, t)?;
    let mut grad = Gradient::zeros_like(e);
    let d = e.dim();
    for_each_cell(t, EXACT_GRID_BUDGET, |idx, p_data, p_noise| {
        let g = loss_derivative(p_data, p_noise, kappa, e.inner(idx));
        for n in 0..idx.len() {
            let out = grad.row_mut(n, idx[n], d);
            for (r, o) in out.iter_mut().enumerate() {
                let others: f64 =
                    (0..idx.len()).filter(|&m| m != n).map(|m| e.factor(m).row(idx[m])[r]).product();
                *o += g * others;
            }
        }
    })?;
    Ok(grad)
}

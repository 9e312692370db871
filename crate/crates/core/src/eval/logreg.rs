use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegConfig {
    /// Penalty `l2 / 2 * |W|^2` on the weights; intercepts are not penalized.
    pub l2: f64,
    pub max_epochs: usize,
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self { l2: 1e-4, max_epochs: 500, tolerance: 1e-6 }
    }
}

/// Multinomial logistic regression on standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogReg {
    classes: Vec<usize>,
    dim: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// One row of `dim` weights followed by the intercept per class.
    params: Vec<f64>,
    /// Objective after every accepted step, starting from the initial point.
    pub loss_history: Vec<f64>,
}

/// Training rows held standardized, with their class positions.
struct Problem<'a> {
    x: Vec<f64>,
    y: Vec<usize>,
    dim: usize,
    classes: usize,
    cfg: &'a LogRegConfig,
}

impl Problem<'_> {
    fn width(&self) -> usize {
        self.dim + 1
    }

    /// Objective and, when `grad` is given, its gradient.
    fn evaluate(&self, params: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let (c, w) = (self.classes, self.width());
        let n = self.y.len() as f64;
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        let mut logits = vec![0.0; c];
        let mut loss = 0.0;
        for (row, &label) in self.x.chunks_exact(self.dim).zip(&self.y) {
            for (z, p) in logits.iter_mut().zip(params.chunks_exact(w)) {
                *z = p[self.dim] + row.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
            }
            let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let norm: f64 = logits.iter().map(|z| (z - top).exp()).sum();
            let log_norm = top + norm.ln();
            loss += log_norm - logits[label];
            if let Some(g) = grad.as_deref_mut() {
                for (cls, gc) in g.chunks_exact_mut(w).enumerate() {
                    let residual = ((logits[cls] - log_norm).exp() - f64::from(u8::from(cls == label))) / n;
                    gc[..self.dim].iter_mut().zip(row).for_each(|(a, &x)| *a += residual * x);
                    gc[self.dim] += residual;
                }
            }
        }
        let mut penalty = 0.0;
        for (cls, p) in params.chunks_exact(w).enumerate() {
            for (r, &v) in p[..self.dim].iter().enumerate() {
                penalty += v * v;
                if let Some(g) = grad.as_deref_mut() {
                    g[cls * w + r] += self.cfg.l2 * v;
                }
            }
        }
        loss / n + 0.5 * self.cfg.l2 * penalty
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl LogReg {
    /// Fits by full-batch gradient descent with a backtracking (Armijo) line search.
    pub fn fit(features: &[f64], dim: usize, labels: &[usize], cfg: &LogRegConfig) -> Result<Self, EvalError> {
        if dim == 0 || features.len() != dim * labels.len() {
            return Err(EvalError::Config(format!("{} values for {} rows of width {dim}", features.len(), labels.len())));
        }
        let mut classes = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(EvalError::Degenerate(format!("training labels hold {} class(es)", classes.len())));
        }
        let n = labels.len() as f64;
        let mut mean = vec![0.0; dim];
        for row in features.chunks_exact(dim) {
            mean.iter_mut().zip(row).for_each(|(m, x)| *m += x / n);
        }
        let mut scale = vec![0.0; dim];
        for row in features.chunks_exact(dim) {
            scale.iter_mut().zip(row).zip(&mean).for_each(|((s, x), m)| *s += (x - m).powi(2) / n);
        }
        scale.iter_mut().for_each(|s| *s = if *s > 0.0 { s.sqrt() } else { 1.0 });
        let x: Vec<f64> = features
            .chunks_exact(dim)
            .flat_map(|row| row.iter().zip(&mean).zip(&scale).map(|((x, m), s)| (x - m) / s))
            .collect();
        let y: Vec<usize> = labels.iter().map(|l| classes.binary_search(l).expect("collected above")).collect();
        let problem = Problem { x, y, dim, classes: classes.len(), cfg };

        let size = classes.len() * problem.width();
        let mut params = vec![0.0; size];
        let mut grad = vec![0.0; size];
        let mut trial = vec![0.0; size];
        let mut loss = problem.evaluate(&params, Some(&mut grad));
        let mut loss_history = vec![loss];
        let mut step = 1.0;
        for _ in 0..cfg.max_epochs {
            let g2 = grad.iter().map(|g| g * g).sum::<f64>();
            if g2.sqrt() < cfg.tolerance {
                break;
            }
            let mut accepted = None;
            for _ in 0..60 {
                trial.iter_mut().zip(&params).zip(&grad).for_each(|((t, p), g)| *t = p - step * g);
                let candidate = problem.evaluate(&trial, None);
                if candidate <= loss - 0.5 * step * g2 {
                    accepted = Some(candidate);
                    break;
                }
                step *= 0.5;
            }
            if accepted.is_none() {
                break;
            }
            std::mem::swap(&mut params, &mut trial);
            loss = problem.evaluate(&params, Some(&mut grad));
            loss_history.push(loss);
            step *= 2.0;
        }
        log::trace!("logistic regression stopped at loss {loss:.6}, gradient norm {:.2e}", norm(&grad));
        Ok(Self { classes, dim, mean, scale, params, loss_history })
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    /// Most probable class of each row.
    pub fn predict(&self, features: &[f64]) -> Vec<usize> {
        let w = self.dim + 1;
        let mut z = vec![0.0; self.dim];
        features
            .chunks_exact(self.dim)
            .map(|row| {
                z.iter_mut().zip(row).zip(&self.mean).zip(&self.scale).for_each(|(((z, x), m), s)| *z = (x - m) / s);
                let mut best = (f64::NEG_INFINITY, 0);
                for (cls, p) in self.params.chunks_exact(w).enumerate() {
                    let logit = p[self.dim] + z.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
                    if logit > best.0 {
                        best = (logit, cls);
                    }
                }
                self.classes[best.1]
            })
            .collect()
    }
}

pub fn logreg_fit(features: &[f64], dim: usize, labels: &[usize], cfg: &LogRegConfig) -> Result<LogReg, EvalError> {
    LogReg::fit(features, dim, labels, cfg)
}

pub fn logreg_predict(model: &LogReg, features: &[f64]) -> Vec<usize> {
    model.predict(features)
}

/// Unweighted mean of per-class F1 over the classes present in `truth`.
pub fn macro_f1(truth: &[usize], predicted: &[usize]) -> f64 {
    assert_eq!(truth.len(), predicted.len(), "label vectors differ in length");
    let mut classes = truth.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let total: f64 = classes
        .iter()
        .map(|&c| {
            let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
            for (&t, &p) in truth.iter().zip(predicted) {
                match (t == c, p == c) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fn_ += 1,
                    (false, false) => {}
                }
            }
            if tp == 0 {
                0.0
            } else {
                2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
            }
        })
        .sum();
    total / classes.len() as f64
}

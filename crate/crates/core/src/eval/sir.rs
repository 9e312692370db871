use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::seed;
use crate::temporal_graph::TimeVaryingGraph;

/// Compartment of a node; the order `S < I < R` is the only direction of travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SirState {
    S,
    I,
    R,
}

impl SirState {
    pub fn label(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirConfig {
    /// Infection probability per unit of contact weight.
    pub beta: f64,
    /// Recovery probability per slice.
    pub mu: f64,
    pub seed: u64,
    /// Seed node; `None` draws one uniformly.
    pub initial_infected: Option<usize>,
}

impl SirConfig {
    pub fn new(beta: f64, mu: f64, seed: u64) -> Self {
        Self { beta, mu, seed, initial_infected: None }
    }

    fn validate(&self, g: &TimeVaryingGraph) -> Result<(), EvalError> {
        if !(0.0..=1.0).contains(&self.beta) || !(0.0..=1.0).contains(&self.mu) {
            return Err(EvalError::Config(format!("beta {} and mu {} must lie in [0, 1]", self.beta, self.mu)));
        }
        if self.initial_infected.is_some_and(|n| n >= g.num_nodes()) {
            return Err(EvalError::Config("initial infected node out of range".into()));
        }
        Ok(())
    }
}

/// Compartment of every node at the start of every slice, stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SirTrajectory {
    num_nodes: usize,
    num_times: usize,
    states: Vec<SirState>,
    pub seed_node: usize,
}

impl SirTrajectory {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_times(&self) -> usize {
        self.num_times
    }

    pub fn state(&self, node: usize, time: usize) -> SirState {
        self.states[time * self.num_nodes + node]
    }

    /// States of all nodes at slice `time`.
    pub fn slice(&self, time: usize) -> &[SirState] {
        &self.states[time * self.num_nodes..(time + 1) * self.num_nodes]
    }

    /// `(S, I, R)` counts at slice `time`.
    pub fn counts(&self, time: usize) -> [usize; 3] {
        let mut c = [0; 3];
        for s in self.slice(time) {
            c[s.label()] += 1;
        }
        c
    }

    /// State of every active pair, in [`TimeVaryingGraph::active_pairs`] order.
    pub fn labels(&self, g: &TimeVaryingGraph) -> Vec<((usize, usize), SirState)> {
        g.active_pairs().map(|(i, k)| ((i, k), self.state(i, k))).collect()
    }
}

/// Discrete-time SIR on the slices of `g`.
///
/// The seed node turns infected at its first active slice. During slice `k` every event
/// between an infected and a susceptible node transmits with probability
/// `1 - (1 - beta)^weight`, and every node infected at the start of `k` recovers with
/// probability `mu`. Changes take effect at slice `k + 1`, so recorded states are those
/// at the start of each slice.
pub fn sir_simulate(g: &TimeVaryingGraph, cfg: &SirConfig) -> Result<SirTrajectory, EvalError> {
    cfg.validate(g)?;
    let (n, t) = (g.num_nodes(), g.num_times());
    if n == 0 || t == 0 {
        return Err(EvalError::Config("empty graph".into()));
    }
    let mut rng = seed::rng(cfg.seed);
    let seed_node = cfg.initial_infected.unwrap_or_else(|| rng.random_range(0..n));
    let onset = g.activity(seed_node).first().copied().unwrap_or(0);

    let mut current = vec![SirState::S; n];
    let mut next = current.clone();
    let mut states = Vec::with_capacity(n * t);
    for k in 0..t {
        if k == onset {
            current[seed_node] = SirState::I;
        }
        states.extend_from_slice(&current);
        next.copy_from_slice(&current);
        for e in g.events_at(k) {
            let target = match (current[e.i], current[e.j]) {
                (SirState::I, SirState::S) => e.j,
                (SirState::S, SirState::I) => e.i,
                _ => continue,
            };
            let p = 1.0 - (1.0 - cfg.beta).powf(e.weight);
            if rng.random::<f64>() < p {
                next[target] = SirState::I;
            }
        }
        for (node, s) in current.iter().enumerate() {
            if *s == SirState::I && rng.random::<f64>() < cfg.mu {
                next[node] = SirState::R;
            }
        }
        std::mem::swap(&mut current, &mut next);
    }
    Ok(SirTrajectory { num_nodes: n, num_times: t, states, seed_node })
}

/// Simulates until a realization still has an infected node at the middle slice,
/// redrawing the seed up to `max_attempts` times.
pub fn sir_simulate_surviving(
    g: &TimeVaryingGraph,
    cfg: &SirConfig,
    max_attempts: usize,
) -> Result<SirTrajectory, EvalError> {
    let half = g.num_times() / 2;
    for attempt in 0..max_attempts as u64 {
        let seed = if attempt == 0 { cfg.seed } else { seed::derive(cfg.seed, "sir-retry", attempt) };
        let traj = sir_simulate(g, &SirConfig { seed, ..*cfg })?;
        if traj.counts(half)[SirState::I.label()] >= 1 {
            return Ok(traj);
        }
        log::info!("SIR realization {attempt} died out before slice {half}; redrawing");
    }
    Err(EvalError::Degenerate(format!(
        "no SIR realization with beta {} mu {} survived to slice {half} in {max_attempts} attempts",
        cfg.beta, cfg.mu
    )))
}

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{weighted::WeightedAliasIndex, Distribution};
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::seed;
use crate::temporal_graph::TimeVaryingGraph;

/// Independent train/test partitions of nodes and slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub node_train: Vec<bool>,
    pub time_train: Vec<bool>,
    pub fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    /// Node `i` at slice `k`: `Some(true)` for train, `Some(false)` for test, `None` when
    /// the pair straddles the partitions.
    pub fn node_side(&self, i: usize, k: usize) -> Option<bool> {
        (self.node_train[i] == self.time_train[k]).then_some(self.node_train[i])
    }

    /// Same as [`SplitSpec::node_side`] for an event, which needs both endpoints on one side.
    pub fn event_side(&self, i: usize, j: usize, k: usize) -> Option<bool> {
        let side = self.node_train[i];
        (self.node_train[j] == side && self.time_train[k] == side).then_some(side)
    }
}

fn partition(n: usize, fraction: f64, rng: &mut seed::Rng) -> Vec<bool> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let n_train = (fraction * n as f64).round() as usize;
    let mut train = vec![false; n];
    for &x in &order[..n_train.min(n)] {
        train[x] = true;
    }
    train
}

/// Draws uniform node and slice partitions with `round(fraction * n)` training members each.
pub fn make_split(g: &TimeVaryingGraph, fraction: f64, seed: u64) -> Result<SplitSpec, EvalError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(EvalError::Config(format!("split fraction {fraction} outside [0, 1]")));
    }
    if g.num_nodes() < 2 || g.num_times() < 2 {
        return Err(EvalError::Config("splitting needs at least two nodes and two slices".into()));
    }
    let mut rng = seed::rng(seed);
    let node_train = partition(g.num_nodes(), fraction, &mut rng);
    let time_train = partition(g.num_times(), fraction, &mut rng);
    for (name, side) in [("node", &node_train), ("time", &time_train)] {
        if side.iter().all(|&x| x) || side.iter().all(|&x| !x) {
            return Err(EvalError::Degenerate(format!("{name} split with fraction {fraction} leaves one side empty")));
        }
    }
    Ok(SplitSpec { node_train, time_train, fraction, seed })
}

/// Non-events `(i, j, k)` with `i < j`, both endpoints active at `k`, as many as `g` has events.
///
/// Slices are drawn in proportion to their event counts and endpoints uniformly among the
/// slice's active nodes. Rejection sampling stops after `64 |E|` draws, after which the
/// remaining candidates are enumerated and drawn without replacement.
pub fn negative_events(g: &TimeVaryingGraph, seed: u64) -> Result<Vec<(usize, usize, usize)>, EvalError> {
    let target = g.num_events();
    let mut active_at: Vec<Vec<usize>> = vec![Vec::new(); g.num_times()];
    for (i, k) in g.active_pairs() {
        active_at[k].push(i);
    }
    let events: HashSet<(usize, usize, usize)> = g.events().iter().map(|e| (e.i, e.j, e.k)).collect();
    let candidates: usize =
        active_at.iter().map(|a| a.len() * a.len().saturating_sub(1) / 2).sum::<usize>() - events.len();
    if candidates < target {
        return Err(EvalError::Infeasible { needed: target, available: candidates });
    }

    let mut rng = seed::rng(seed);
    let mut chosen: HashSet<(usize, usize, usize)> = HashSet::with_capacity(target);
    let mut out = Vec::with_capacity(target);
    let slice_weights: Vec<f64> = (0..g.num_times()).map(|k| g.events_at(k).len() as f64).collect();
    let slices = WeightedAliasIndex::new(slice_weights).map_err(|e| EvalError::Config(e.to_string()))?;
    let mut draws = 0usize;
    while out.len() < target && draws < 64 * target {
        draws += 1;
        let k = slices.sample(&mut rng);
        let active = &active_at[k];
        let a = active[rng.random_range(0..active.len())];
        let b = active[rng.random_range(0..active.len())];
        let key = (a.min(b), a.max(b), k);
        if a != b && !events.contains(&key) && chosen.insert(key) {
            out.push(key);
        }
    }
    if out.len() < target {
        log::info!("negative sampling hit its draw cap; filling {} events exhaustively", target - out.len());
        let mut rest = Vec::new();
        for (k, active) in active_at.iter().enumerate() {
            for (x, &a) in active.iter().enumerate() {
                for &b in &active[x + 1..] {
                    let key = (a, b, k);
                    if !events.contains(&key) && !chosen.contains(&key) {
                        rest.push(key);
                    }
                }
            }
        }
        let missing = target - out.len();
        let (picked, _) = rest.partial_shuffle(&mut rng, missing);
        out.extend_from_slice(picked);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeVaryingGraph {
        let mut events = Vec::new();
        for k in 0..6 {
            for i in 0..6 {
                if (i + k) % 3 != 0 {
                    events.push((i, (i + 1) % 6, k, 1.0));
                }
            }
        }
        TimeVaryingGraph::from_events(events).unwrap()
    }

    #[test]
    fn full_fraction_is_degenerate() {
        assert!(matches!(make_split(&grid(), 1.0, 0), Err(EvalError::Degenerate(_))));
        assert!(matches!(make_split(&grid(), 0.0, 0), Err(EvalError::Degenerate(_))));
    }

    #[test]
    fn sides_partition_nodes_and_times() {
        let g = grid();
        let s = make_split(&g, 0.7, 4).unwrap();
        assert_eq!(s.node_train.iter().filter(|&&x| x).count(), 4);
        assert_eq!(s.time_train.iter().filter(|&&x| x).count(), 4);
        for (i, k) in g.active_pairs() {
            match s.node_side(i, k) {
                Some(side) => assert!(s.node_train[i] == side && s.time_train[k] == side),
                None => assert_ne!(s.node_train[i], s.time_train[k]),
            }
        }
    }

    #[test]
    fn negatives_avoid_events_and_respect_activity() {
        let g = grid();
        let neg = negative_events(&g, 2).unwrap();
        assert_eq!(neg.len(), g.num_events());
        let events: HashSet<_> = g.events().iter().map(|e| (e.i, e.j, e.k)).collect();
        let unique: HashSet<_> = neg.iter().copied().collect();
        assert_eq!(unique.len(), neg.len());
        for &(i, j, k) in &neg {
            assert!(i < j && g.is_active(i, k) && g.is_active(j, k));
            assert!(!events.contains(&(i, j, k)));
        }
    }

    #[test]
    fn complete_slices_are_infeasible() {
        let g = TimeVaryingGraph::from_events([(0, 1, 0, 1.0), (0, 2, 0, 1.0), (1, 2, 0, 1.0), (0, 1, 1, 1.0)]).unwrap();
        assert!(matches!(negative_events(&g, 0), Err(EvalError::Infeasible { needed: 4, available: 0 })));
    }

    #[test]
    fn exhaustive_fill_reaches_the_target() {
        // As many non-events as events: every candidate must be used.
        let g = TimeVaryingGraph::from_events([(0, 1, 0, 1.0), (1, 2, 0, 1.0), (2, 3, 0, 1.0)]).unwrap();
        let mut neg = negative_events(&g, 7).unwrap();
        neg.sort_unstable();
        assert_eq!(neg, vec![(0, 2, 0), (0, 3, 0), (1, 3, 0)]);
    }
}

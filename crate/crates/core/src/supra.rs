//! Supra-adjacency graph of a time-varying graph.
//!
//! Vertices are active `(node, time)` pairs. For every event `(i, j, t0)`:
//!
//! * if `i` is next active at `t1 > t0`, a cross-coupling edge `(j@t0, i@t1)` with the
//!   event weight and a self-coupling edge `(i@t0, i@t1)` with weight 1 are added;
//! * symmetrically for `j` and its next activation `t2`.
//!
//! Self-coupling edges are added once per pair; cross-coupling contributions add up.
//! Every edge joins two different time slices, so random walks on this graph are
//! time-respecting paths of the original graph.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;
use crate::temporal_graph::TimeVaryingGraph;

#[derive(Debug, Error)]
pub enum SupraError {
    #[error("graph has no edges")]
    NoEdges,
    #[error("invalid walk configuration: {0}")]
    WalkConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Symmetric weighted graph in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
    volume: f64,
}

impl WeightedGraph {
    /// Builds the graph from undirected edges; repeated edges accumulate.
    /// A loop `(a, a, w)` contributes `w` once to `A[a][a]`.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(a, b, w) in edges {
            assert!(a < n && b < n, "edge ({a},{b}) outside {n} vertices");
            *acc.entry((a, b)).or_insert(0.0) += w;
            if a != b {
                *acc.entry((b, a)).or_insert(0.0) += w;
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for &(a, _) in acc.keys() {
            row_ptr[a + 1] += 1;
        }
        for a in 0..n {
            row_ptr[a + 1] += row_ptr[a];
        }
        let mut cols = Vec::with_capacity(acc.len());
        let mut weights = Vec::with_capacity(acc.len());
        for ((_, b), w) in acc {
            cols.push(b);
            weights.push(w);
        }
        let degrees: Vec<f64> = (0..n).map(|a| weights[row_ptr[a]..row_ptr[a + 1]].iter().sum()).collect();
        let volume = degrees.iter().sum();
        Self { row_ptr, cols, weights, degrees, volume }
    }

    pub fn num_nodes(&self) -> usize {
        self.degrees.len()
    }

    /// Number of stored directed entries (each undirected edge counts twice).
    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn neighbors(&self, a: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[a]..self.row_ptr[a + 1];
        (&self.cols[r.clone()], &self.weights[r])
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        let (cols, ws) = self.neighbors(a);
        cols.binary_search(&b).map(|p| ws[p]).unwrap_or(0.0)
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn degree(&self, a: usize) -> f64 {
        self.degrees[a]
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Undirected edges `(a, b, w)` with `a <= b`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_nodes()).flat_map(move |a| {
            let (cols, ws) = self.neighbors(a);
            cols.iter().zip(ws).filter(move |(&b, _)| a <= b).map(move |(&b, &w)| (a, b, w))
        })
    }

    /// Row-normalised walk matrix `D^-1 A`. Rows of isolated vertices stay empty.
    pub fn transition_matrix(&self) -> TransitionMatrix {
        let probs = (0..self.num_nodes())
            .flat_map(|a| {
                let d = self.degrees[a];
                self.neighbors(a).1.iter().map(move |w| w / d)
            })
            .collect();
        TransitionMatrix {
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            probs,
            absorbing: self.degrees.iter().map(|&d| d == 0.0).collect(),
        }
    }

    /// Degree-proportional distribution `d_a / vol`.
    ///
    /// On a disconnected graph the global volume is used and the component count is reported.
    pub fn stationary_distribution(&self) -> Result<StationaryDistribution, SupraError> {
        if self.volume <= 0.0 {
            return Err(SupraError::NoEdges);
        }
        let (num_components, _) = self.components();
        Ok(StationaryDistribution {
            probs: self.degrees.iter().map(|d| d / self.volume).collect(),
            num_components,
        })
    }

    /// Connected components among vertices with at least one edge.
    pub fn components(&self) -> (usize, Vec<Option<usize>>) {
        let n = self.num_nodes();
        let mut label = vec![None; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start].is_some() || self.degrees[start] == 0.0 {
                continue;
            }
            label[start] = Some(count);
            stack.push(start);
            while let Some(a) = stack.pop() {
                for &b in self.neighbors(a).0 {
                    if label[b].is_none() {
                        label[b] = Some(count);
                        stack.push(b);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }
}

/// Sparse row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    probs: Vec<f64>,
    absorbing: Vec<bool>,
}

impl TransitionMatrix {
    pub fn num_nodes(&self) -> usize {
        self.absorbing.len()
    }

    pub fn row(&self, a: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[a]..self.row_ptr[a + 1];
        (&self.cols[r.clone()], &self.probs[r])
    }

    pub fn is_absorbing(&self, a: usize) -> bool {
        self.absorbing[a]
    }

    /// `v^T P` for a dense row vector `v`.
    pub fn left_multiply(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (a, &va) in v.iter().enumerate() {
            if va == 0.0 {
                continue;
            }
            let (cols, ps) = self.row(a);
            for (&b, &p) in cols.iter().zip(ps) {
                out[b] += va * p;
            }
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.num_nodes();
        let mut m = vec![vec![0.0; n]; n];
        for (a, row) in m.iter_mut().enumerate() {
            let (cols, ps) = self.row(a);
            for (&b, &p) in cols.iter().zip(ps) {
                row[b] = p;
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pub probs: Vec<f64>,
    pub num_components: usize,
}

/// Vertex of the supra graph: node `node` active at slice `time`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupraNode {
    pub node: usize,
    pub time: usize,
    pub flat: usize,
}

/// Random-walk sampling parameters. `walk_length` counts steps, so a full walk
/// visits `walk_length + 1` vertices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub window: usize,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self { window: 10, walks_per_node: 10, walk_length: 80, seed: 0 }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), SupraError> {
        if self.window == 0 || self.walks_per_node == 0 || self.walk_length == 0 {
            return Err(SupraError::WalkConfig("window, walks_per_node and walk_length must be positive".into()));
        }
        if self.window > self.walk_length {
            return Err(SupraError::WalkConfig(format!(
                "window {} exceeds walk length {}",
                self.window, self.walk_length
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupraGraph {
    nodes: Vec<SupraNode>,
    /// `offsets[i]` is the flat index of node `i`'s first activation.
    offsets: Vec<usize>,
    activity: Vec<Vec<usize>>,
    num_times: usize,
    adjacency: WeightedGraph,
}

/// Builds the supra-adjacency graph.
pub fn build_supra(g: &TimeVaryingGraph) -> SupraGraph {
    let mut offsets = Vec::with_capacity(g.num_nodes() + 1);
    let mut nodes = Vec::with_capacity(g.num_active());
    for i in 0..g.num_nodes() {
        offsets.push(nodes.len());
        for &t in g.activity(i) {
            nodes.push(SupraNode { node: i, time: t, flat: nodes.len() });
        }
    }
    offsets.push(nodes.len());
    let activity: Vec<Vec<usize>> = (0..g.num_nodes()).map(|i| g.activity(i).to_vec()).collect();
    let flat = |i: usize, t: usize| offsets[i] + activity[i].binary_search(&t).expect("active pair");

    let mut cross: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut selfc: BTreeSet<(usize, usize)> = BTreeSet::new();
    for e in g.events() {
        for (mover, other) in [(e.i, e.j), (e.j, e.i)] {
            if let Some(next) = g.next_active(mover, e.k) {
                let a = flat(other, e.k);
                let b = flat(mover, next);
                *cross.entry((a.min(b), a.max(b))).or_insert(0.0) += e.weight;
                selfc.insert((flat(mover, e.k), b));
            }
        }
    }
    let mut edges: Vec<(usize, usize, f64)> = cross.into_iter().map(|((a, b), w)| (a, b, w)).collect();
    edges.extend(selfc.into_iter().map(|(a, b)| (a, b, 1.0)));
    let adjacency = WeightedGraph::from_edges(nodes.len(), &edges);
    SupraGraph { nodes, offsets, activity, num_times: g.num_times(), adjacency }
}

impl SupraGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[SupraNode] {
        &self.nodes
    }

    pub fn num_graph_nodes(&self) -> usize {
        self.activity.len()
    }

    pub fn num_times(&self) -> usize {
        self.num_times
    }

    pub fn flat(&self, node: usize, time: usize) -> Option<usize> {
        let acts = self.activity.get(node)?;
        acts.binary_search(&time).ok().map(|p| self.offsets[node] + p)
    }

    pub fn unflat(&self, flat: usize) -> SupraNode {
        self.nodes[flat]
    }

    pub fn adjacency(&self) -> &WeightedGraph {
        &self.adjacency
    }

    pub fn degrees(&self) -> &[f64] {
        self.adjacency.degrees()
    }

    pub fn volume(&self) -> f64 {
        self.adjacency.volume()
    }

    pub fn transition_matrix(&self) -> TransitionMatrix {
        self.adjacency.transition_matrix()
    }

    pub fn stationary_distribution(&self) -> Result<StationaryDistribution, SupraError> {
        self.adjacency.stationary_distribution()
    }

    /// Writes `flat_a flat_b weight` lines, one per undirected edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<(), SupraError> {
        for (a, b, w) in self.adjacency.edges() {
            writeln!(out, "{a} {b} {w}")?;
        }
        Ok(())
    }

    /// JSON array of `[node, time]` pairs indexed by flat index.
    pub fn index_map_json(&self) -> String {
        let pairs: Vec<(usize, usize)> = self.nodes.iter().map(|n| (n.node, n.time)).collect();
        serde_json::to_string(&pairs).expect("plain pairs serialize")
    }
}

/// Samples `walks_per_node` walks from every non-isolated supra vertex.
///
/// Each walk has its own generator derived from `(seed, start, repetition)`, so the
/// result does not depend on the number of worker threads.
pub fn sample_walks(s: &SupraGraph, cfg: &WalkConfig) -> Result<Vec<Vec<usize>>, SupraError> {
    cfg.validate()?;
    let adj = s.adjacency();
    if adj.volume() <= 0.0 {
        return Err(SupraError::NoEdges);
    }
    let cumulative: Vec<f64> = (0..adj.num_nodes())
        .flat_map(|a| {
            let mut acc = 0.0;
            adj.neighbors(a).1.iter().map(move |w| {
                acc += w;
                acc
            })
        })
        .collect();
    let step = |a: usize, rng: &mut seed::Rng| -> usize {
        let r = adj.row_ptr[a]..adj.row_ptr[a + 1];
        let cum = &cumulative[r.clone()];
        let u = rng.random::<f64>() * cum[cum.len() - 1];
        let pos = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
        adj.cols[r.start + pos]
    };
    let walks: Vec<Vec<Vec<usize>>> = (0..s.len())
        .into_par_iter()
        .filter(|&a| adj.degree(a) > 0.0)
        .map(|start| {
            (0..cfg.walks_per_node)
                .map(|rep| {
                    let mut rng = seed::stage_rng(seed::derive(cfg.seed, "walk", start as u64), "walk-rep", rep as u64);
                    let mut walk = Vec::with_capacity(cfg.walk_length + 1);
                    walk.push(start);
                    let mut cur = start;
                    for _ in 0..cfg.walk_length {
                        if adj.degree(cur) == 0.0 {
                            break;
                        }
                        cur = step(cur, &mut rng);
                        walk.push(cur);
                    }
                    walk
                })
                .collect()
        })
        .collect();
    Ok(walks.into_iter().flatten().collect())
}

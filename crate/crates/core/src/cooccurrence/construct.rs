use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use super::tensor::{strides_for, CooccurrenceTensor, ModeRole};
use super::TensorError;
use crate::supra::{sample_walks, SupraError, SupraGraph, WalkConfig};
use crate::temporal_graph::TimeVaryingGraph;

/// Largest number of stored entries the exact random-walk tensor may produce.
pub const DEFAULT_ENTRY_BUDGET: usize = 60_000_000;

/// Snapshot tensor: each event contributes its weight to both orderings of its endpoints.
pub fn stat_tensor(g: &TimeVaryingGraph) -> Result<CooccurrenceTensor, TensorError> {
    let (v, t) = (g.num_nodes(), g.num_times());
    let vol = g.volume();
    if g.num_events() == 0 || vol <= 0.0 {
        return Err(TensorError::Invalid("graph has no events".into()));
    }
    let sizes = vec![v, v, t];
    let strides = strides_for(&sizes)?;
    let key = |i: usize, j: usize, k: usize| i as u64 * strides[0] + j as u64 * strides[1] + k as u64;
    let keyed = g
        .events()
        .iter()
        .flat_map(|e| [(key(e.i, e.j, e.k), e.weight / vol), (key(e.j, e.i, e.k), e.weight / vol)])
        .collect();
    CooccurrenceTensor::from_keyed(sizes, vec![ModeRole::Node, ModeRole::Context, ModeRole::Time], keyed, false)
}

fn dyn_sizes(s: &SupraGraph) -> Vec<usize> {
    let (v, t) = (s.num_graph_nodes(), s.num_times());
    vec![v, v, t, t]
}

fn dyn_roles() -> Vec<ModeRole> {
    ModeRole::defaults(4)
}

/// Exact random-walk tensor with the default entry budget.
pub fn dyn_tensor(s: &SupraGraph, window: usize) -> Result<CooccurrenceTensor, TensorError> {
    dyn_tensor_with_budget(s, window, DEFAULT_ENTRY_BUDGET)
}

/// Exact random-walk tensor.
///
/// For supra vertices `a = (i, k)` and `b = (j, l)` the entry at `(i, j, k, l)` is the
/// symmetrised windowed co-occurrence `(1/2w) sum_{r=1..w} [p(a) P^r(a,b) + p(b) P^r(b,a)]`
/// under the stationary walk. Fails with [`TensorError::Resource`] once the support
/// exceeds `max_entries`.
pub fn dyn_tensor_with_budget(
    s: &SupraGraph,
    window: usize,
    max_entries: usize,
) -> Result<CooccurrenceTensor, TensorError> {
    if window == 0 {
        return Err(TensorError::Invalid("window must be positive".into()));
    }
    let stat = s.stationary_distribution()?;
    let p = &stat.probs;
    let trans = s.transition_matrix();
    let n = s.len();
    let used = AtomicUsize::new(0);

    // rows[a] holds (b, p(a) sum_r P^r(a,b)) for every reachable b, sorted by b.
    let rows: Vec<Option<Vec<(u32, f64)>>> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n], vec![0.0; n]),
            |(cur, next, acc), a| {
                if p[a] == 0.0 || used.load(Ordering::Relaxed) > max_entries {
                    return Some(Vec::new());
                }
                cur.iter_mut().for_each(|x| *x = 0.0);
                acc.iter_mut().for_each(|x| *x = 0.0);
                cur[a] = 1.0;
                for _ in 0..window {
                    trans.left_multiply(cur, next);
                    std::mem::swap(cur, next);
                    acc.iter_mut().zip(cur.iter()).for_each(|(s, c)| *s += c);
                }
                let row: Vec<(u32, f64)> =
                    acc.iter().enumerate().filter(|(_, &x)| x > 0.0).map(|(b, &x)| (b as u32, p[a] * x)).collect();
                if used.fetch_add(row.len(), Ordering::Relaxed) + row.len() > max_entries {
                    return None;
                }
                Some(row)
            },
        )
        .collect();
    let rows: Vec<Vec<(u32, f64)>> = match rows.into_iter().collect::<Option<Vec<_>>>() {
        Some(r) if used.load(Ordering::Relaxed) <= max_entries => r,
        _ => return Err(TensorError::Resource { budget: max_entries }),
    };

    let lookup = |a: usize, b: usize| -> Option<f64> {
        let row = &rows[a];
        row.binary_search_by_key(&(b as u32), |&(c, _)| c).ok().map(|pos| row[pos].1)
    };
    let sizes = dyn_sizes(s);
    let strides = strides_for(&sizes)?;
    let nodes = s.nodes();
    let key = |a: usize, b: usize| {
        let (x, y) = (nodes[a], nodes[b]);
        x.node as u64 * strides[0] + y.node as u64 * strides[1] + x.time as u64 * strides[2] + y.time as u64
    };
    let scale = 1.0 / (2.0 * window as f64);
    let mut keyed: Vec<(u64, f64)> = Vec::with_capacity(used.load(Ordering::Relaxed));
    for (a, row) in rows.iter().enumerate() {
        for &(b, s_ab) in row {
            let b = b as usize;
            match lookup(b, a) {
                Some(s_ba) => keyed.push((key(a, b), (s_ab + s_ba) * scale)),
                None => {
                    keyed.push((key(a, b), s_ab * scale));
                    keyed.push((key(b, a), s_ab * scale));
                }
            }
        }
    }
    drop(rows);
    CooccurrenceTensor::from_keyed(sizes, dyn_roles(), keyed, true)
}

/// Random-walk tensor estimated from sampled walks.
///
/// Walks start uniformly over non-isolated supra vertices; weighting each walk by the
/// degree of its start vertex makes every position a stationary draw. Only positions
/// followed by a full window are counted, and each pair is counted in both directions.
pub fn dyn_tensor_sampled(s: &SupraGraph, cfg: &WalkConfig) -> Result<CooccurrenceTensor, TensorError> {
    let walks = sample_walks(s, cfg)?;
    let deg = s.degrees();
    let n = s.len() as u64;
    let w = cfg.window;
    let mut counts: HashMap<u64, f64> = HashMap::new();
    for walk in &walks {
        let weight = deg[walk[0]];
        if walk.len() <= w {
            continue;
        }
        for pos in 0..walk.len() - w {
            let a = walk[pos] as u64;
            for &b in &walk[pos + 1..=pos + w] {
                let b = b as u64;
                *counts.entry(a * n + b).or_insert(0.0) += weight;
                *counts.entry(b * n + a).or_insert(0.0) += weight;
            }
        }
    }
    if counts.is_empty() {
        return Err(TensorError::Supra(SupraError::NoEdges));
    }
    let sizes = dyn_sizes(s);
    let strides = strides_for(&sizes)?;
    let nodes = s.nodes();
    let keyed = counts
        .into_iter()
        .map(|(pair, c)| {
            let (x, y) = (nodes[(pair / n) as usize], nodes[(pair % n) as usize]);
            let key =
                x.node as u64 * strides[0] + y.node as u64 * strides[1] + x.time as u64 * strides[2] + y.time as u64;
            (key, c)
        })
        .collect();
    CooccurrenceTensor::from_keyed(sizes, dyn_roles(), keyed, true)
}

/// Average of the snapshot tensor, lifted onto the `time == context-time` diagonal, and
/// the random-walk tensor.
pub fn statdyn_tensor(stat: &CooccurrenceTensor, dynamic: &CooccurrenceTensor) -> Result<CooccurrenceTensor, TensorError> {
    let (ss, ds) = (stat.mode_sizes(), dynamic.mode_sizes());
    if ss.len() != 3 || ds.len() != 4 || ss != &ds[..3] || ds[2] != ds[3] {
        return Err(TensorError::Shape(format!("cannot combine shapes {ss:?} and {ds:?}")));
    }
    let mut idx = [0usize; 3];
    let mut keyed: Vec<(u64, f64)> = Vec::with_capacity(stat.nnz() + dynamic.nnz());
    for (&k, &v) in stat.keys().iter().zip(stat.values()) {
        stat.decode_into(k, &mut idx);
        keyed.push((dynamic.encode(&[idx[0], idx[1], idx[2], idx[2]]), 0.5 * v));
    }
    keyed.extend(dynamic.keys().iter().zip(dynamic.values()).map(|(&k, &v)| (k, 0.5 * v)));
    CooccurrenceTensor::from_keyed(ds.to_vec(), dynamic.roles().to_vec(), keyed, true)
}

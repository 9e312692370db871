use super::TensorError;
use crate::supra::WeightedGraph;

/// Dense `sum_{r=1..window} P^r` together with the stationary distribution.
fn power_sum(g: &WeightedGraph, window: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>), TensorError> {
    if window == 0 {
        return Err(TensorError::Invalid("window must be positive".into()));
    }
    let p = g.stationary_distribution()?.probs;
    let trans = g.transition_matrix().to_dense();
    let n = g.num_nodes();
    let mut power = trans.clone();
    let mut sum = trans.clone();
    for _ in 1..window {
        let mut next = vec![vec![0.0; n]; n];
        for (row, out) in power.iter().zip(next.iter_mut()) {
            for (k, &x) in row.iter().enumerate() {
                if x != 0.0 {
                    for (o, &t) in out.iter_mut().zip(&trans[k]) {
                        *o += x * t;
                    }
                }
            }
        }
        power = next;
        for (s, r) in sum.iter_mut().zip(&power) {
            s.iter_mut().zip(r).for_each(|(a, b)| *a += b);
        }
    }
    Ok((sum, p))
}

fn pmi_from(sum: &[Vec<f64>], p: &[f64], i: usize, j: usize, window: usize) -> f64 {
    let num = (p[i] * sum[i][j] + p[j] * sum[j][i]) / (2.0 * window as f64);
    (num / (p[i] * p[j])).ln()
}

/// Expected PMI of the node-context pair `(i, j)` for walks with a `window`-sized context.
///
/// Returns `-inf` when `j` is unreachable from `i` within the window.
pub fn deepwalk_expected_pmi(g: &WeightedGraph, i: usize, j: usize, window: usize) -> Result<f64, TensorError> {
    let n = g.num_nodes();
    if i >= n || j >= n {
        return Err(TensorError::Domain(format!("node pair ({i}, {j}) outside a graph of {n} nodes")));
    }
    if g.degree(i) == 0.0 || g.degree(j) == 0.0 {
        return Err(TensorError::Domain(format!("node pair ({i}, {j}) includes an isolated node")));
    }
    let (sum, p) = power_sum(g, window)?;
    Ok(pmi_from(&sum, &p, i, j, window))
}

/// Expected PMI for all node pairs; rows and columns of isolated nodes are `NaN`.
pub fn deepwalk_pmi_matrix(g: &WeightedGraph, window: usize) -> Result<Vec<Vec<f64>>, TensorError> {
    let (sum, p) = power_sum(g, window)?;
    let n = g.num_nodes();
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| if p[i] == 0.0 || p[j] == 0.0 { f64::NAN } else { pmi_from(&sum, &p, i, j, window) })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_window_one() {
        let g = WeightedGraph::from_edges(2, &[(0, 1, 1.0)]);
        assert!((deepwalk_expected_pmi(&g, 0, 1, 1).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(deepwalk_expected_pmi(&g, 0, 0, 1).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn regular_graph_is_symmetric() {
        // On a 4-cycle the walk is reversible with uniform stationary law.
        let g = WeightedGraph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)]);
        let m = deepwalk_pmi_matrix(&g, 3).unwrap();
        for (i, row) in m.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert!((x - m[j][i]).abs() < 1e-12);
            }
        }
        // Opposite corners: P(0,2) is 0 then 1/2, so the numerator equals p(0) p(2).
        let two = deepwalk_pmi_matrix(&g, 2).unwrap();
        assert!(two[0][2].abs() < 1e-12);
        assert!(two[0][1].abs() < 1e-12);
        let one = deepwalk_pmi_matrix(&g, 1).unwrap();
        assert!((one[0][1] - 2f64.ln()).abs() < 1e-12);
        assert_eq!(one[0][2], f64::NEG_INFINITY);
    }

    #[test]
    fn isolated_node_is_rejected() {
        let g = WeightedGraph::from_edges(3, &[(0, 1, 1.0)]);
        assert!(matches!(deepwalk_expected_pmi(&g, 0, 2, 1), Err(TensorError::Domain(_))));
        assert!(deepwalk_pmi_matrix(&g, 1).unwrap()[2][0].is_nan());
    }
}

use std::collections::VecDeque;

use super::Graph;
use crate::error::{Error, Result};

pub const PAGERANK_TOL: f64 = 1e-10;
pub const PAGERANK_MAX_ITER: usize = 10_000;

/// PageRank with the default iteration cap.
pub fn pagerank(graph: &Graph, damping: f64, tol: f64) -> Result<Vec<f64>> {
    pagerank_with(graph, damping, tol, PAGERANK_MAX_ITER)
}

/// Power iteration for `S(i) = (1-α)/N + α Σ_{j→i} S(j)/outdeg(j)`.
///
/// Mass held by nodes without outgoing edges is spread uniformly. Stops when
/// the L1 change between iterates drops below `tol`.
pub fn pagerank_with(graph: &Graph, damping: f64, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "damping must lie in (0, 1), got {damping}"
        )));
    }
    let n = graph.n_nodes();
    let nf = n as f64;
    let out_deg = graph.degrees();
    let mut scores = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let dangling: f64 = (0..n).filter(|&j| out_deg[j] == 0).map(|j| scores[j]).sum();
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        for (i, slot) in next.iter_mut().enumerate() {
            let inflow: f64 = graph
                .in_neighbors(i)
                .iter()
                .map(|&j| scores[j] / out_deg[j] as f64)
                .sum();
            *slot = base + damping * inflow;
        }
        residual = scores.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut scores, &mut next);
        if residual < tol {
            // absorb round-off so the scores form a distribution
            let total: f64 = scores.iter().sum();
            scores.iter_mut().for_each(|s| *s /= total);
            return Ok(scores);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Shortest-path betweenness (Brandes) on the unweighted graph.
///
/// Undirected graphs count each unordered pair `{j, k}` once; directed graphs
/// count ordered pairs. Endpoints are never credited.
pub fn betweenness(graph: &Graph) -> Vec<f64> {
    let n = graph.n_nodes();
    let mut scores = vec![0.0; n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();

    for s in 0..n {
        sigma.iter_mut().for_each(|v| *v = 0.0);
        dist.iter_mut().for_each(|v| *v = usize::MAX);
        delta.iter_mut().for_each(|v| *v = 0.0);
        preds.iter_mut().for_each(Vec::clear);
        order.clear();

        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in graph.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        for &w in order.iter().rev() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                scores[w] += delta[w];
            }
        }
    }
    if graph.is_undirected() {
        scores.iter_mut().for_each(|s| *s /= 2.0);
    }
    scores
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    fn complete(n: usize) -> Graph {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((i, j));
            }
        }
        Graph::build(&e, n, true).unwrap()
    }

    #[test]
    fn pagerank_single_node() {
        let g = Graph::build(&[], 1, true).unwrap();
        assert_abs_diff_eq!(pagerank(&g, 0.85, PAGERANK_TOL).unwrap()[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pagerank_cycle_is_uniform() {
        let g = Graph::build(&[(0, 1), (1, 2), (2, 3), (3, 0)], 4, true).unwrap();
        for s in pagerank(&g, 0.85, PAGERANK_TOL).unwrap() {
            assert_abs_diff_eq!(s, 0.25, epsilon = 1e-10);
        }
    }

    #[test]
    fn pagerank_path_matches_linear_solve() {
        // Symmetry gives s0 = s2 = e, s1 = m with
        //   e = 0.05 + 0.85 m / 2,  m = 0.05 + 0.85 * 2e,  2e + m = 1.
        let g = Graph::build(&[(0, 1), (1, 2)], 3, true).unwrap();
        let s = pagerank(&g, 0.85, PAGERANK_TOL).unwrap();
        let a = 0.85;
        let q = (1.0 - a) / 3.0;
        let m = (q + 2.0 * a * q) / (1.0 - a * a);
        let e = q + a * m / 2.0;
        assert_abs_diff_eq!(s[1], m, epsilon = 1e-9);
        assert_abs_diff_eq!(s[0], e, epsilon = 1e-9);
        assert!(s[1] > s[0] && s[1] > s[2]);
    }

    #[test]
    fn pagerank_handles_dangling_nodes() {
        let g = Graph::build(&[(0, 1), (1, 2)], 4, false).unwrap();
        let s = pagerank(&g, 0.85, PAGERANK_TOL).unwrap();
        assert_abs_diff_eq!(s.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(s[2] > s[3]);
    }

    #[test]
    fn pagerank_reports_non_convergence() {
        let g = Graph::build(&[(0, 1), (1, 2)], 3, true).unwrap();
        let err = pagerank_with(&g, 0.85, 1e-30, 3).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 3, .. }));
        assert!(pagerank(&g, 1.0, 1e-10).is_err());
    }

    #[test]
    fn betweenness_complete_graph_is_zero() {
        assert!(betweenness(&complete(4)).iter().all(|&b| b == 0.0));
    }

    #[test]
    fn betweenness_path_and_star() {
        let path = Graph::build(&[(0, 1), (1, 2)], 3, true).unwrap();
        assert_eq!(betweenness(&path), vec![0.0, 1.0, 0.0]);
        let star = Graph::build(&[(0, 1), (0, 2), (0, 3), (0, 4)], 5, true).unwrap();
        assert_eq!(betweenness(&star), vec![6.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn betweenness_disconnected_pairs_contribute_nothing() {
        let g = Graph::build(&[(0, 1), (1, 2), (3, 4)], 5, true).unwrap();
        assert_eq!(betweenness(&g), vec![0.0, 1.0, 0.0, 0.0, 0.0]);
    }
}

use std::sync::{Arc, RwLock};

use ndarray::{Array2, ArrayView2, ArrayViewMut2};

use super::Graph;

/// `Â = D̃^{-1/2} (A + I) D̃^{-1/2}` with `D̃_ii = sum_j (A + I)_ij`.
///
/// Stored both dense and as per-row / per-column nonzero lists so that the
/// GCN propagation step costs `O(nnz * width)`.
#[derive(Debug)]
pub struct NormalizedAdjacency {
    dense: Array2<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<(usize, f64)>>,
    // powers[k] = Â^k, filled on demand
    powers: RwLock<Vec<Arc<Array2<f64>>>>,
}

impl Clone for NormalizedAdjacency {
    fn clone(&self) -> Self {
        Self::from_dense(self.dense.clone())
    }
}

impl PartialEq for NormalizedAdjacency {
    fn eq(&self, other: &Self) -> bool {
        self.dense == other.dense
    }
}

impl NormalizedAdjacency {
    pub fn from_graph(graph: &Graph) -> Self {
        Self::from_graph_masked(graph, None)
    }

    /// Normalized adjacency of the subgraph induced by the `active` nodes.
    /// Inactive nodes get an all-zero row and column (no self-loop either),
    /// and degrees are recomputed on the surviving subgraph.
    pub fn from_graph_masked(graph: &Graph, active: Option<&[bool]>) -> Self {
        let n = graph.n_nodes();
        let is_active = |i: usize| active.is_none_or(|m| m[i]);
        let mut deg = vec![0.0f64; n];
        for (i, d) in deg.iter_mut().enumerate() {
            if is_active(i) {
                *d = 1.0 + graph
                    .neighbors(i)
                    .iter()
                    .filter(|&&j| is_active(j))
                    .count() as f64;
            }
        }
        let inv_sqrt: Vec<f64> = deg
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
            .collect();
        let mut dense = Array2::<f64>::zeros((n, n));
        for i in (0..n).filter(|&i| is_active(i)) {
            dense[[i, i]] = inv_sqrt[i] * inv_sqrt[i];
            for &j in graph.neighbors(i) {
                if is_active(j) {
                    dense[[i, j]] = inv_sqrt[i] * inv_sqrt[j];
                }
            }
        }
        Self::from_dense(dense)
    }

    pub(crate) fn from_dense(dense: Array2<f64>) -> Self {
        let n = dense.nrows();
        let mut rows = vec![Vec::new(); n];
        let mut cols = vec![Vec::new(); n];
        for ((i, j), &w) in dense.indexed_iter() {
            if w != 0.0 {
                rows[i].push((j, w));
                cols[j].push((i, w));
            }
        }
        Self {
            dense,
            rows,
            cols,
            powers: RwLock::new(Vec::new()),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.dense.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.dense
    }

    /// Nonzero entries `(j, Â_ij)` of row `i`.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// `Â · H`.
    pub fn propagate(&self, h: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_nodes(), h.ncols()));
        sparse_mul_into(&self.rows, h, out.view_mut());
        out
    }

    /// `Âᵀ · H`, used when backpropagating through a propagation step.
    pub fn propagate_transpose(&self, h: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_nodes(), h.ncols()));
        sparse_mul_into(&self.cols, h, out.view_mut());
        out
    }

    /// Writes `Â · H` (or `Âᵀ · H`) into `out`, which must be zeroed.
    pub(crate) fn propagate_into(
        &self,
        h: ArrayView2<'_, f64>,
        out: ArrayViewMut2<'_, f64>,
        transpose: bool,
    ) {
        let lists = if transpose { &self.cols } else { &self.rows };
        sparse_mul_into(lists, h, out);
    }

    /// `Â^k`, computed once per `k` and cached.
    pub fn power(&self, k: usize) -> Arc<Array2<f64>> {
        if let Some(p) = self.powers.read().expect("power cache poisoned").get(k) {
            return Arc::clone(p);
        }
        let mut cache = self.powers.write().expect("power cache poisoned");
        if cache.is_empty() {
            cache.push(Arc::new(Array2::eye(self.n_nodes())));
        }
        while cache.len() <= k {
            let next = cache[cache.len() - 1].dot(&self.dense);
            cache.push(Arc::new(next));
        }
        Arc::clone(&cache[k])
    }
}

fn sparse_mul_into(
    lists: &[Vec<(usize, f64)>],
    h: ArrayView2<'_, f64>,
    mut out: ArrayViewMut2<'_, f64>,
) {
    for (i, entries) in lists.iter().enumerate() {
        let mut row = out.row_mut(i);
        for &(j, w) in entries {
            row.scaled_add(w, &h.row(j));
        }
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use ndarray::arr2;

    use super::*;

    #[test]
    fn single_node_is_one() {
        let g = Graph::build(&[], 1, true).unwrap();
        assert_eq!(g.normalized_adjacency().matrix(), &arr2(&[[1.0]]));
    }

    #[test]
    fn two_node_path_is_half() {
        let g = Graph::build(&[(0, 1)], 2, true).unwrap();
        let a = g.normalized_adjacency();
        for &v in a.matrix().iter() {
            assert_abs_diff_eq!(v, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn triangle_is_one_third() {
        let g = Graph::build(&[(0, 1), (1, 2), (2, 0)], 3, true).unwrap();
        for &v in g.normalized_adjacency().matrix().iter() {
            assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn isolated_node_keeps_unit_self_loop() {
        let g = Graph::build(&[(0, 1)], 3, true).unwrap();
        assert_eq!(g.normalized_adjacency().matrix()[[2, 2]], 1.0);
    }

    #[test]
    fn masked_node_has_empty_row_and_column() {
        let g = Graph::build(&[(0, 1), (1, 2)], 3, true).unwrap();
        let a = NormalizedAdjacency::from_graph_masked(&g, Some(&[true, false, true]));
        assert!(a.matrix().row(1).iter().all(|&v| v == 0.0));
        assert!(a.matrix().column(1).iter().all(|&v| v == 0.0));
        assert_eq!(a.matrix()[[0, 0]], 1.0);
    }

    #[test]
    fn propagate_matches_dense_product() {
        let g = Graph::build(&[(0, 1), (1, 2), (2, 3)], 4, false).unwrap();
        let a = g.normalized_adjacency();
        let h = Array2::from_shape_fn((4, 3), |(i, j)| (i * 3 + j) as f64 * 0.5 - 1.0);
        let sparse = a.propagate(h.view());
        let dense = a.matrix().dot(&h);
        let sparse_t = a.propagate_transpose(h.view());
        let dense_t = a.matrix().t().dot(&h);
        for (x, y) in sparse.iter().zip(&dense).chain(sparse_t.iter().zip(&dense_t)) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-14);
        }
    }

    #[test]
    fn powers_are_cached_products() {
        let g = Graph::build(&[(0, 1), (1, 2)], 3, true).unwrap();
        let a = g.normalized_adjacency();
        assert_eq!(*a.power(0), Array2::<f64>::eye(3));
        let p2 = a.power(2);
        assert_eq!(*p2, a.matrix().dot(a.matrix()));
        assert!(Arc::ptr_eq(&p2, &a.power(2)));
    }
}

//! Road graph, GCN propagation matrix and the structural scores used by the
//! baseline attack-node selectors.

mod centrality;
mod kmedoids;
mod normalized;

use std::collections::{BTreeSet, VecDeque};

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use centrality::{betweenness, pagerank, pagerank_with, PAGERANK_MAX_ITER, PAGERANK_TOL};
pub use kmedoids::{k_medoids, medoid_cost, Medoids};
pub use normalized::NormalizedAdjacency;

/// Unweighted road graph with a binary adjacency matrix.
///
/// Row `i` of the adjacency lists the nodes whose features node `i`
/// aggregates. The diagonal is always zero; self-loops only appear in the
/// normalized adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Array2<u8>,
    out_neighbors: Vec<Vec<usize>>,
    in_neighbors: Vec<Vec<usize>>,
    positions: Option<Vec<[f64; 2]>>,
    undirected: bool,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicate edges collapse and
    /// self-loops are ignored.
    pub fn build(edges: &[(usize, usize)], n_nodes: usize, undirected: bool) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut adjacency = Array2::<u8>::zeros((n_nodes, n_nodes));
        for &(i, j) in edges {
            for index in [i, j] {
                if index >= n_nodes {
                    return Err(Error::NodeOutOfRange { index, n_nodes });
                }
            }
            if i == j {
                continue;
            }
            adjacency[[i, j]] = 1;
            if undirected {
                adjacency[[j, i]] = 1;
            }
        }
        Ok(Self::from_parts(adjacency, undirected))
    }

    /// Wraps a dense 0/1 matrix. The graph is flagged undirected when the
    /// matrix is symmetric.
    pub fn from_adjacency(mut adjacency: Array2<u8>) -> Result<Self> {
        let (rows, cols) = adjacency.dim();
        if rows == 0 {
            return Err(Error::EmptyGraph);
        }
        if rows != cols {
            return Err(Error::ShapeMismatch {
                expected: format!("{rows}x{rows}"),
                actual: format!("{rows}x{cols}"),
            });
        }
        if let Some(&v) = adjacency.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidArgument(format!(
                "adjacency entries must be 0 or 1, found {v}"
            )));
        }
        for i in 0..rows {
            adjacency[[i, i]] = 0;
        }
        let undirected = adjacency == adjacency.t();
        Ok(Self::from_parts(adjacency, undirected))
    }

    fn from_parts(adjacency: Array2<u8>, undirected: bool) -> Self {
        let n = adjacency.nrows();
        let mut out_neighbors = vec![Vec::new(); n];
        let mut in_neighbors = vec![Vec::new(); n];
        for ((i, j), &a) in adjacency.indexed_iter() {
            if a != 0 {
                out_neighbors[i].push(j);
                in_neighbors[j].push(i);
            }
        }
        Self {
            adjacency,
            out_neighbors,
            in_neighbors,
            positions: None,
            undirected,
        }
    }

    /// Attaches planar coordinates (longitude, latitude) used by K-Medoids.
    pub fn with_positions(mut self, positions: Vec<[f64; 2]>) -> Result<Self> {
        if positions.len() != self.n_nodes() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} positions", self.n_nodes()),
                actual: format!("{} positions", positions.len()),
            });
        }
        self.positions = Some(positions);
        Ok(self)
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &Array2<u8> {
        &self.adjacency
    }

    pub fn is_undirected(&self) -> bool {
        self.undirected
    }

    pub fn positions(&self) -> Option<&[[f64; 2]]> {
        self.positions.as_deref()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[[i, j]] != 0
    }

    /// Nodes `j` with `A[i][j] = 1`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.out_neighbors[i]
    }

    /// Nodes `j` with `A[j][i] = 1`.
    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_neighbors[i]
    }

    /// Row degree `sum_j A[i][j]`.
    pub fn degree(&self, i: usize) -> usize {
        self.out_neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.out_neighbors.iter().map(Vec::len).collect()
    }

    pub fn n_edges(&self) -> usize {
        let arcs: usize = self.degrees().iter().sum();
        if self.undirected {
            arcs / 2
        } else {
            arcs
        }
    }

    /// Edge list; each undirected edge appears once with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for (i, nbrs) in self.out_neighbors.iter().enumerate() {
            for &j in nbrs {
                if !self.undirected || i < j {
                    edges.push((i, j));
                }
            }
        }
        edges
    }

    /// Same node set and positions, keeping only the listed edges.
    pub fn with_edges(&self, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::build(edges, self.n_nodes(), self.undirected)?;
        g.positions = self.positions.clone();
        Ok(g)
    }

    pub fn normalized_adjacency(&self) -> NormalizedAdjacency {
        NormalizedAdjacency::from_graph(self)
    }

    /// Hop distances from `source` following adjacency rows (`i -> j` when
    /// `A[i][j] = 1`). Unreachable nodes are `None`.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        bfs(&self.out_neighbors, source)
    }

    /// Hop distances to `target`: entry `i` is the length of the shortest
    /// path `i -> ... -> target`. This is the direction in which a feature
    /// change at `target` propagates through graph convolution.
    pub fn bfs_distances_to(&self, target: usize) -> Vec<Option<usize>> {
        bfs(&self.in_neighbors, target)
    }

    /// All nodes within `k` edges of `i`, including `i` itself.
    pub fn k_hop_neighbors(&self, i: usize, k: usize) -> Result<BTreeSet<usize>> {
        self.check_node(i)?;
        Ok(self
            .bfs_distances(i)
            .into_iter()
            .enumerate()
            .filter_map(|(j, d)| d.filter(|&d| d <= k).map(|_| j))
            .collect())
    }

    /// Hex SHA-256 of the node count and adjacency bytes. Checkpoints record
    /// it so a model is never attacked against the wrong graph.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n_nodes() as u64).to_le_bytes());
        hasher.update([u8::from(self.undirected)]);
        for &a in self.adjacency.iter() {
            hasher.update([a]);
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub(crate) fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.n_nodes() {
            return Err(Error::NodeOutOfRange {
                index: i,
                n_nodes: self.n_nodes(),
            });
        }
        Ok(())
    }
}

fn bfs(adj: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or(0);
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

#![allow(dead_code)]

use diffattack::graph::Graph;
use diffattack::predictor::GcnPredictor;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi graph with edge probability `p`.
pub fn random_graph(n: usize, p: f64, undirected: bool, rng: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && (!undirected || i < j) && rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::build(&edges, n, undirected).unwrap()
}

/// GCN with weights uniform in ±1 and a random readout bias.
pub fn random_gcn(input: usize, hidden: &[usize], horizon: usize, rng: &mut impl Rng) -> GcnPredictor {
    let mut draw = |r: usize, c: usize| Array2::from_shape_simple_fn((r, c), || rng.gen_range(-1.0..1.0));
    let mut layers = Vec::new();
    let mut fan_in = input;
    for &h in hidden {
        layers.push(draw(fan_in, h));
        fan_in = h;
    }
    let readout = draw(fan_in, horizon);
    let bias = Array1::from_shape_simple_fn(horizon, || rng.gen_range(-1.0..1.0));
    GcnPredictor::from_weights(layers, readout, bias).unwrap()
}

pub fn positive_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(10.0..80.0))
}

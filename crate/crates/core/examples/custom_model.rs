//! Attack any black-box predictor. Here the "model" is a hand-written
//! two-step neighbourhood average; the attack only ever calls `predict`.
//!
//! cargo run --release --example custom_model

use diffattack::attack::{run_attack, AttackConfig, AttackSet};
use diffattack::evaluation::{aai, aair};
use diffattack::graph::Graph;
use diffattack::predictor::FnModel;
use ndarray::{Array2, Axis};

fn main() -> diffattack::Result<()> {
    // 0-1-2-3-4 corridor with a side street 2-5
    let graph = Graph::build(&[(0, 1), (1, 2), (2, 3), (3, 4), (2, 5)], 6, true)?;
    let a_hat = graph.normalized_adjacency();
    let model = FnModel(move |x: &Array2<f64>| {
        let last = x.slice(ndarray::s![.., -3..]).mean_axis(Axis(1)).unwrap().insert_axis(Axis(1));
        a_hat.propagate(a_hat.propagate(last.view()).view())
    });

    let x = Array2::from_shape_fn((6, 12), |(i, t)| 50.0 + 2.0 * i as f64 - 0.5 * t as f64);
    let set = AttackSet::new([2], 6)?;
    let cfg = AttackConfig {
        max_iter: 2_000,
        ..Default::default()
    };
    let out = run_attack(&model, &x, &set, &cfg)?;
    let phi = &out.influence.phi;
    println!("attacked node 2 with {} model calls", out.evaluations);
    for (i, p) in phi.iter().enumerate() {
        println!("  node {i}: phi = {p:8.4} km/h");
    }
    println!("AAI {:.4} km/h, AAIR {:.4}", aai(phi), aair(phi, &out.influence.baseline)?.value);
    Ok(())
}

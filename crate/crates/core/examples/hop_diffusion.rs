//! Attack one node and watch the influence fade with hop distance.
//!
//! cargo run --release --example hop_diffusion -- [checkpoint] [node]

mod common;

use diffattack::evaluation::hop_influence;

fn main() -> diffattack::Result<()> {
    let s = common::setup()?;
    let degrees = s.graph.degrees();
    let node = std::env::args()
        .nth(2)
        .map(|v| v.parse().expect("node index"))
        .unwrap_or_else(|| (0..degrees.len()).max_by_key(|&i| degrees[i]).unwrap());
    let x = s.dataset.sample(s.dataset.test_starts()[0]).0;
    let curve = hop_influence(&s.model, &x, &s.graph, node, &s.cfg.attack_config())?;

    println!("node {node} (degree {}), {}-layer model", degrees[node], s.model.n_layers());
    println!("hop  nodes  mean |phi| (km/h)");
    for (k, (m, c)) in curve.mean_abs_phi.iter().zip(&curve.counts).enumerate() {
        println!("{k:>3}  {c:>5}  {m:.4}");
    }
    if let Some(m) = curve.unreachable_mean {
        println!("unreachable: {} nodes, {m:.4}", curve.unreachable_count);
    }
    Ok(())
}

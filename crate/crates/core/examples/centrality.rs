//! Node rankings used by the baseline selectors on the synthetic road graph.
//!
//! cargo run --release --example centrality

use diffattack::graph::{betweenness, k_medoids, pagerank, PAGERANK_TOL};
use diffattack::io::{synthetic_graph, SyntheticSpec};

fn top(scores: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order.into_iter().take(k).map(|i| (i, scores[i])).collect()
}

fn main() -> diffattack::Result<()> {
    let graph = synthetic_graph(&SyntheticSpec::default())?;
    let degrees: Vec<f64> = graph.degrees().into_iter().map(|d| d as f64).collect();
    println!(
        "{} nodes, {} edges, mean degree {:.2}",
        graph.n_nodes(),
        graph.n_edges(),
        degrees.iter().sum::<f64>() / degrees.len() as f64
    );

    let pr = pagerank(&graph, 0.85, PAGERANK_TOL)?;
    let bw = betweenness(&graph);
    for (name, scores) in [("degree", &degrees), ("pagerank", &pr), ("betweenness", &bw)] {
        let best: Vec<String> = top(scores, 5).iter().map(|(i, s)| format!("{i} ({s:.4})")).collect();
        println!("{name:>12}: {}", best.join(", "));
    }

    let positions = graph.positions().expect("synthetic graphs carry positions");
    let fit = k_medoids(positions, 5, 0)?;
    println!("   5-medoids: {:?}, cost {:.3}, {} swaps", fit.medoids, fit.cost, fit.swaps);
    Ok(())
}

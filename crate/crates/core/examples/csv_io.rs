//! Load speeds and a road graph from CSV, or round-trip the synthetic
//! benchmark through CSV when no files are given.
//!
//! cargo run --release --example csv_io -- [speeds.csv adjacency.csv [positions.csv]]

use std::path::PathBuf;

use diffattack::io::{
    adjacency_csv_string, generate_synthetic, load_graph, load_speed_csv, positions_csv_string, write_speed_csv,
    SyntheticSpec,
};
use diffattack::predictor::WindowedDataset;

fn main() -> diffattack::Result<()> {
    let args: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    let _tmp;
    let (speeds, adjacency, positions) = if args.len() >= 2 {
        (args[0].clone(), args[1].clone(), args.get(2).cloned())
    } else {
        let (graph, data) = generate_synthetic(&SyntheticSpec::default())?;
        _tmp = tempfile::tempdir().expect("temp dir");
        let dir = _tmp.path();
        write_speed_csv(&dir.join("speeds.csv"), &data)?;
        std::fs::write(dir.join("adjacency.csv"), adjacency_csv_string(&graph)).expect("write");
        std::fs::write(dir.join("positions.csv"), positions_csv_string(graph.positions().unwrap())).expect("write");
        let reloaded = load_speed_csv(&dir.join("speeds.csv"))?;
        println!("round trip exact: {}", reloaded.speeds == data.speeds);
        (dir.join("speeds.csv"), dir.join("adjacency.csv"), Some(dir.join("positions.csv")))
    };

    let data = load_speed_csv(&speeds)?;
    let graph = load_graph(&adjacency, positions.as_deref())?;
    println!(
        "{} steps x {} nodes; graph {} edges, hash {}",
        data.total_steps(),
        data.n_nodes(),
        graph.n_edges(),
        &graph.hash()[..12]
    );
    let windows = WindowedDataset::new(data.speeds, 12, 3, 0.8)?;
    println!(
        "{} training windows, {} test windows",
        windows.train_starts().len(),
        windows.test_starts().len()
    );
    Ok(())
}

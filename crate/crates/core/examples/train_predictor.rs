//! Generate the synthetic benchmark, train a 2-layer GCN and report test
//! accuracy and RMSE.
//!
//! cargo run --release --example train_predictor -- [epochs] [drop_mode] [save_path]
//!
//! The saved checkpoint can be passed to the other examples.

use std::time::Instant;

use diffattack::io::{generate_synthetic, SyntheticSpec};
use diffattack::predictor::{train, DropMode, GcnPredictor, TrainingConfig, WindowedDataset};
use diffattack::BlackBoxModel;

fn main() -> diffattack::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map(|s| s.parse().expect("epochs")).unwrap_or(300);
    let drop_mode: DropMode = args.next().map(|s| s.parse()).transpose()?.unwrap_or_default();
    let save = args.next();

    let spec = SyntheticSpec::default();
    let (graph, data) = generate_synthetic(&spec)?;
    println!("graph: {} nodes, {} edges", graph.n_nodes(), graph.n_edges());

    let dataset = WindowedDataset::new(data.speeds, 12, 3, 0.8)?;
    let net = GcnPredictor::new(12, &[16, 16], 3, 1)?;
    let config = TrainingConfig {
        epochs,
        drop_mode,
        ..Default::default()
    };
    let outcome = train(net, &dataset, &graph, &config)?;
    let h = &outcome.history;
    println!(
        "{drop_mode}: loss {:.6} -> {:.6}, accuracy {:.4}, rmse {:.3} km/h, {:.1}s",
        h.epoch_loss.first().copied().unwrap_or(f64::NAN),
        h.epoch_loss.last().copied().unwrap_or(f64::NAN),
        h.test_accuracy,
        h.test_rmse,
        h.seconds
    );

    let (x, _) = dataset.sample(dataset.test_starts()[0]);
    let start = Instant::now();
    let reps = 2000;
    for _ in 0..reps {
        outcome.model.predict(&x)?;
    }
    println!("predict: {:.1} µs/call", start.elapsed().as_secs_f64() * 1e6 / reps as f64);
    if let Some(path) = save {
        outcome.model.checkpoint().save(path.as_ref())?;
        println!("saved {path}");
    }
    Ok(())
}

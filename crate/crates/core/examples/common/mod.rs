#![allow(dead_code)]

//! Benchmark setup shared by the examples.

use diffattack::cli;
use diffattack::graph::Graph;
use diffattack::io::RunConfig;
use diffattack::predictor::{Checkpoint, TrainedModel, WindowedDataset};

pub struct Setup {
    pub cfg: RunConfig,
    pub graph: Graph,
    pub dataset: WindowedDataset,
    pub model: TrainedModel,
}

/// Default synthetic benchmark. The model is loaded from the checkpoint given
/// as the first argument, or trained for 100 epochs.
pub fn setup() -> diffattack::Result<Setup> {
    let mut cfg = RunConfig::default();
    cfg.training.epochs = 100;
    let (graph, data) = cli::load_inputs(&cfg)?;
    let dataset = WindowedDataset::new(data.speeds, cfg.window, cfg.horizon, cfg.training.train_fraction)?;
    let model = match std::env::args().nth(1) {
        Some(path) => TrainedModel::bind(Checkpoint::load(path.as_ref())?, &graph)?,
        None => {
            eprintln!("training {} epochs (pass a checkpoint to skip)", cfg.training.epochs);
            cli::train_model(&cfg, &graph, &dataset)?.model
        }
    };
    Ok(Setup {
        cfg,
        graph,
        dataset,
        model,
    })
}

//! Train one model per drop regularizer and attack each of them.
//!
//! cargo run --release --example drop_grid -- [epochs]

use diffattack::cli;
use diffattack::evaluation::{comparison_table, select_windows, ModelVariant};
use diffattack::io::RunConfig;
use diffattack::predictor::{DropMode, WindowedDataset};
use diffattack::{BlackBoxModel, BudgetSpec, SelectionStrategy};

fn main() -> diffattack::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.training.epochs = std::env::args().nth(1).map(|v| v.parse().expect("epochs")).unwrap_or(100);
    let (graph, data) = cli::load_inputs(&cfg)?;
    let dataset = WindowedDataset::new(data.speeds, cfg.window, cfg.horizon, cfg.training.train_fraction)?;

    let modes = [DropMode::None, DropMode::DropOut, DropMode::DropNode, DropMode::DropEdge];
    let mut models = Vec::new();
    for mode in modes {
        let mut c = cfg.clone();
        c.training.drop_mode = mode;
        let out = cli::train_model(&c, &graph, &dataset)?;
        println!("{:>9}: accuracy {:.4}", mode.name(), out.history.test_accuracy);
        models.push(out.model);
    }

    let names = ["original", "drop_out", "drop_node", "drop_edge"];
    let variants: Vec<ModelVariant<'_>> = names
        .iter()
        .zip(&models)
        .map(|(name, m)| ModelVariant {
            name,
            model: m as &dyn BlackBoxModel,
        })
        .collect();
    let costs = BudgetSpec::degree_costs(&graph, 0.0)?;
    let budget = costs.with_total(0.25 * costs.total_cost())?;
    let table = comparison_table(
        &variants,
        &[SelectionStrategy::Random, SelectionStrategy::KgPagerank, SelectionStrategy::KgSpsa],
        &graph,
        &select_windows(&dataset, 2, 0),
        &budget,
        &cfg.attack_config(),
        0,
    )?;
    print!("{}", table.to_text());
    Ok(())
}

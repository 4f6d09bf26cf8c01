//! All nine selection strategies at one budget on the same windows.
//!
//! cargo run --release --example strategy_comparison -- [checkpoint]

mod common;

use diffattack::evaluation::{comparison_table, select_windows, ModelVariant};
use diffattack::{BudgetSpec, SelectionStrategy};

fn main() -> diffattack::Result<()> {
    let s = common::setup()?;
    let windows = select_windows(&s.dataset, 3, 0);
    let costs = BudgetSpec::degree_costs(&s.graph, 0.0)?;
    let budget = costs.with_total(50.0 * s.cfg.budget_scale.factor(costs.total_cost()))?;
    let variants = [ModelVariant {
        name: "original",
        model: &s.model,
    }];
    let table = comparison_table(
        &variants,
        &SelectionStrategy::ALL,
        &s.graph,
        &windows,
        &budget,
        &s.cfg.attack_config(),
        0,
    )?;
    println!("AAI km/h (AAIR) at B = 50, {} windows", windows.len());
    print!("{}", table.to_text());
    Ok(())
}

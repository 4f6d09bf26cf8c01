//! AAI/AAIR of KG-SPSA across the budget grid 20..200, where 200 buys every
//! node.
//!
//! cargo run --release --example budget_sweep -- [checkpoint]

mod common;

use diffattack::evaluation::{budget_sweep, select_windows};
use diffattack::io::config::DEFAULT_BUDGETS;
use diffattack::{BudgetSpec, SelectionStrategy};

fn main() -> diffattack::Result<()> {
    let s = common::setup()?;
    let windows = select_windows(&s.dataset, 3, 0);
    let costs = BudgetSpec::degree_costs(&s.graph, 0.0)?;
    let scale = s.cfg.budget_scale.factor(costs.total_cost());
    let rows = budget_sweep(
        &s.model,
        &s.graph,
        &windows,
        SelectionStrategy::KgSpsa,
        &costs,
        &DEFAULT_BUDGETS,
        scale,
        &s.cfg.attack_config(),
        0,
    )?;
    println!("budget  applied  nodes   AAI (km/h)  AAIR");
    for r in &rows {
        println!(
            "{:>6}  {:>7.1}  {:>5.1}  {:>10.3}  {:.4}",
            r.budget,
            r.applied_budget,
            r.mean_selected(),
            r.aai,
            r.aair
        );
    }
    Ok(())
}

//! KG-SPSA: probe per-node utilities with a short SPSA run, pick nodes by
//! utility per unit cost, then attack them. Compared against Random.
//!
//! cargo run --release --example kg_spsa -- [checkpoint]

mod common;

use diffattack::evaluation::{aai, attack_window, TestWindow};
use diffattack::selection::kg_spsa;
use diffattack::{BudgetSpec, SelectionStrategy};

fn main() -> diffattack::Result<()> {
    let s = common::setup()?;
    let start = s.dataset.test_starts()[0];
    let x = s.dataset.sample(start).0;
    let costs = BudgetSpec::degree_costs(&s.graph, 0.0)?;
    let budget = costs.with_total(0.25 * costs.total_cost())?;
    let cfg = s.cfg.attack_config();

    let out = kg_spsa(&s.model, &x, &budget, &cfg)?;
    let mut ratio: Vec<(usize, f64)> = out
        .utilities
        .values
        .iter()
        .zip(&budget.costs)
        .map(|(u, b)| u / b)
        .enumerate()
        .collect();
    ratio.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("budget {} of {} total degree cost", budget.total, costs.total_cost());
    let best: Vec<String> = ratio[..5].iter().map(|(i, r)| format!("{i} ({r:.2})")).collect();
    println!("best utility/cost: {}", best.join(", "));
    println!(
        "KG-SPSA picked {} nodes (cost {}), AAI {:.3} km/h",
        out.set.len(),
        budget.cost_of(&out.set),
        aai(&out.attack.influence.phi)
    );

    let window = TestWindow { start, x };
    let random = attack_window(&s.model, &s.graph, &window, SelectionStrategy::Random, &budget, &cfg, 1)?;
    println!("Random picked {} nodes, AAI {:.3} km/h", random.set.len(), random.aai);
    Ok(())
}

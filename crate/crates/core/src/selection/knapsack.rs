use super::BudgetSpec;
use crate::attack::AttackSet;

/// Adds nodes in the given order while their cost still fits.
fn fill_in_order(order: &[usize], budget: &BudgetSpec) -> AttackSet {
    let mut spent = 0.0;
    let mut chosen = Vec::new();
    for &i in order {
        if spent + budget.costs[i] <= budget.total {
            spent += budget.costs[i];
            chosen.push(i);
        }
    }
    AttackSet::new(chosen, budget.costs.len()).expect("indices come from the cost vector")
}

/// Descending by key, ties by lowest index.
fn order_by(keys: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]).then(a.cmp(&b)));
    order
}

/// Highest scores first, skipping nodes that no longer fit.
pub fn top_score_selection(scores: &[f64], budget: &BudgetSpec) -> AttackSet {
    fill_in_order(&order_by(scores), budget)
}

/// Greedy knapsack on utility per unit cost `φ̂_i / b_i`.
///
/// Repeatedly adds the unselected node with the best ratio among those that
/// still fit, stopping when none fits. Never exceeds the budget.
pub fn knapsack_greedy(utilities: &[f64], budget: &BudgetSpec) -> AttackSet {
    let ratios: Vec<f64> = utilities
        .iter()
        .zip(&budget.costs)
        .map(|(u, b)| u / b)
        .collect();
    fill_in_order(&order_by(&ratios), budget)
}

/// Exhaustive 0/1 knapsack optimum: best total utility of any feasible
/// subset. Exponential; meant for small instances and tests.
pub fn best_subset_value(utilities: &[f64], budget: &BudgetSpec) -> f64 {
    let n = utilities.len();
    assert!(n <= 24, "exhaustive search over {n} items");
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let (mut cost, mut value) = (0.0, 0.0);
        for (i, (&u, &b)) in utilities.iter().zip(&budget.costs).enumerate() {
            if mask & (1 << i) != 0 {
                cost += b;
                value += u;
            }
        }
        if cost <= budget.total && value > best {
            best = value;
        }
    }
    best
}

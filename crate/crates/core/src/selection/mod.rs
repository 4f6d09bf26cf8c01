//! Attack-node selection under a node-cost budget.
//!
//! Score-based strategies rank nodes by one score and add them in order while
//! the budget allows. Knapsack-greedy (`Kg*`) strategies rank by score per
//! unit cost instead. `Spsa` and `KgSpsa` need only model queries; the others
//! read the graph structure.

mod knapsack;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;

use crate::attack::{run_attack, AttackConfig, AttackOutcome, AttackSet};
use crate::error::{Error, Result};
use crate::graph::{betweenness, k_medoids, pagerank, Graph, PAGERANK_TOL};
use crate::io::seed::{derive_seed, rng_for};
use crate::predictor::BlackBoxModel;

pub use knapsack::{best_subset_value, knapsack_greedy, top_score_selection};

/// Total budget `B` and per-node attack costs `b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSpec {
    pub total: f64,
    pub costs: Vec<f64>,
}

impl BudgetSpec {
    pub fn new(total: f64, costs: Vec<f64>) -> Result<Self> {
        if total.is_nan() || total < 0.0 {
            return Err(Error::InvalidArgument(format!("budget must be non-negative, got {total}")));
        }
        if let Some(c) = costs.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidArgument(format!("node costs must be positive, found {c}")));
        }
        Ok(Self { total, costs })
    }

    /// `b_i = max(degree(i), 1)`.
    pub fn degree_costs(graph: &Graph, total: f64) -> Result<Self> {
        let costs = graph.degrees().into_iter().map(|d| d.max(1) as f64).collect();
        Self::new(total, costs)
    }

    pub fn with_total(&self, total: f64) -> Result<Self> {
        Self::new(total, self.costs.clone())
    }

    pub fn total_cost(&self) -> f64 {
        self.costs.iter().sum()
    }

    pub fn cost_of(&self, set: &AttackSet) -> f64 {
        set.nodes().iter().fold(0.0, |acc, &i| acc + self.costs[i])
    }

    pub fn is_feasible(&self, set: &AttackSet) -> bool {
        self.cost_of(set) <= self.total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    SpsaProbe,
    Pagerank,
    Betweenness,
    Degree,
    Random,
    GeoCluster,
}

/// Per-node utility estimates `φ̂_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityEstimate {
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionStrategy {
    Degree,
    Random,
    KMedoids,
    Pagerank,
    Betweenness,
    Spsa,
    KgPagerank,
    KgBetweenness,
    KgSpsa,
}

impl SelectionStrategy {
    pub const ALL: [SelectionStrategy; 9] = [
        SelectionStrategy::Degree,
        SelectionStrategy::Random,
        SelectionStrategy::KMedoids,
        SelectionStrategy::Pagerank,
        SelectionStrategy::Betweenness,
        SelectionStrategy::KgPagerank,
        SelectionStrategy::KgBetweenness,
        SelectionStrategy::Spsa,
        SelectionStrategy::KgSpsa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectionStrategy::Degree => "Degree",
            SelectionStrategy::Random => "Random",
            SelectionStrategy::KMedoids => "K-Medoids",
            SelectionStrategy::Pagerank => "Pagerank",
            SelectionStrategy::Betweenness => "Betweenness",
            SelectionStrategy::Spsa => "Spsa",
            SelectionStrategy::KgPagerank => "Kg-Pagerank",
            SelectionStrategy::KgBetweenness => "Kg-Betweenness",
            SelectionStrategy::KgSpsa => "Kg-Spsa",
        }
    }

    /// Routed through [`knapsack_greedy`].
    pub fn is_knapsack(self) -> bool {
        matches!(
            self,
            SelectionStrategy::KgPagerank | SelectionStrategy::KgBetweenness | SelectionStrategy::KgSpsa
        )
    }

    /// Needs only model queries, not the graph.
    pub fn is_black_box(self) -> bool {
        matches!(self, SelectionStrategy::Spsa | SelectionStrategy::KgSpsa | SelectionStrategy::Random)
    }
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|st| {
                st.name()
                    .chars()
                    .filter(|c| c.is_ascii_alphanumeric())
                    .collect::<String>()
                    .to_ascii_lowercase()
                    == key
            })
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

/// Runs the attack with `P = V` for `cfg.probe_iter` iterations and returns
/// each node's influence under that perturbation.
pub fn estimate_utilities_spsa<M: BlackBoxModel + ?Sized>(
    model: &M,
    x: &Array2<f64>,
    cfg: &AttackConfig,
) -> Result<UtilityEstimate> {
    let out = run_attack(model, x, &AttackSet::all(x.nrows()), &cfg.probe())?;
    Ok(UtilityEstimate {
        values: out.influence.phi,
        provenance: Provenance::SpsaProbe,
    })
}

/// Result of a selection: the attack set plus the per-node score it ranked by.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub strategy: SelectionStrategy,
    pub set: AttackSet,
    pub scores: Vec<f64>,
}

/// Picks an attack set for window `x` with `strategy`.
///
/// `seed` drives the Random order, K-Medoids initialization and the SPSA
/// utility probe.
pub fn select_nodes<M: BlackBoxModel + ?Sized>(
    strategy: SelectionStrategy,
    graph: &Graph,
    model: &M,
    x: &Array2<f64>,
    budget: &BudgetSpec,
    cfg: &AttackConfig,
    seed: u64,
) -> Result<Selection> {
    let n = graph.n_nodes();
    if budget.costs.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} node costs"),
            actual: budget.costs.len().to_string(),
        });
    }
    let (set, scores) = match strategy {
        SelectionStrategy::Degree => {
            let scores: Vec<f64> = graph.degrees().into_iter().map(|d| d as f64).collect();
            (top_score_selection(&scores, budget), scores)
        }
        SelectionStrategy::Random => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng_for(seed, "select/random"));
            // earlier in the shuffled order = higher score
            let mut scores = vec![0.0; n];
            for (rank, &i) in order.iter().enumerate() {
                scores[i] = (n - rank) as f64;
            }
            (top_score_selection(&scores, budget), scores)
        }
        SelectionStrategy::KMedoids => {
            let set = kmedoids_selection(graph, budget, derive_seed(seed, "select/kmedoids"))?;
            let scores = set.mask(n).into_iter().map(|m| f64::from(u8::from(m))).collect();
            (set, scores)
        }
        SelectionStrategy::Pagerank | SelectionStrategy::KgPagerank => {
            let scores = pagerank(graph, 0.85, PAGERANK_TOL)?;
            (rank(strategy, &scores, budget), scores)
        }
        SelectionStrategy::Betweenness | SelectionStrategy::KgBetweenness => {
            let scores = betweenness(graph);
            (rank(strategy, &scores, budget), scores)
        }
        SelectionStrategy::Spsa | SelectionStrategy::KgSpsa => {
            let probe_cfg = cfg.with_seed(derive_seed(seed, "select/probe"));
            let scores = estimate_utilities_spsa(model, x, &probe_cfg)?.values;
            (rank(strategy, &scores, budget), scores)
        }
    };
    debug_assert!(budget.is_feasible(&set));
    Ok(Selection { strategy, set, scores })
}

fn rank(strategy: SelectionStrategy, scores: &[f64], budget: &BudgetSpec) -> AttackSet {
    if strategy.is_knapsack() {
        knapsack_greedy(scores, budget)
    } else {
        top_score_selection(scores, budget)
    }
}

/// Medoids of the node positions for `k = 1, 2, ...`, keeping the last
/// medoid set whose cost fits the budget.
fn kmedoids_selection(graph: &Graph, budget: &BudgetSpec, seed: u64) -> Result<AttackSet> {
    let positions = graph.positions().ok_or_else(|| {
        Error::InvalidArgument("K-Medoids selection needs node positions".into())
    })?;
    let n = graph.n_nodes();
    let mut best = AttackSet::empty();
    for k in 1..=n {
        let medoids = k_medoids(positions, k, seed)?;
        let set = AttackSet::new(medoids.medoids, n)?;
        if !budget.is_feasible(&set) {
            break;
        }
        best = set;
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct KgSpsaOutcome {
    pub utilities: UtilityEstimate,
    pub set: AttackSet,
    pub attack: AttackOutcome,
}

/// Probe utilities with SPSA on `P = V`, pick `P` by knapsack greedy, then
/// run the full attack on `P`.
pub fn kg_spsa<M: BlackBoxModel + ?Sized>(
    model: &M,
    x: &Array2<f64>,
    budget: &BudgetSpec,
    cfg: &AttackConfig,
) -> Result<KgSpsaOutcome> {
    if budget.costs.len() != x.nrows() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} node costs", x.nrows()),
            actual: budget.costs.len().to_string(),
        });
    }
    let probe_cfg = cfg.with_seed(derive_seed(cfg.seed, "select/probe"));
    let utilities = estimate_utilities_spsa(model, x, &probe_cfg)?;
    let set = knapsack_greedy(&utilities.values, budget);
    let attack = run_attack(model, x, &set, cfg)?;
    Ok(KgSpsaOutcome {
        utilities,
        set,
        attack,
    })
}

#[cfg(test)]
mod tests {
    use ndarray::Axis;

    use super::*;
    use crate::predictor::FnModel;

    fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        let pos = (0..=leaves).map(|i| [i as f64, (i * i) as f64]).collect();
        Graph::build(&edges, leaves + 1, true).unwrap().with_positions(pos).unwrap()
    }

    fn mean_model() -> FnModel<impl Fn(&Array2<f64>) -> Array2<f64> + Sync> {
        FnModel(|x: &Array2<f64>| x.mean_axis(Axis(1)).unwrap().insert_axis(Axis(1)))
    }

    #[test]
    fn degree_costs_floor_isolated_nodes() {
        let g = Graph::build(&[(0, 1)], 3, true).unwrap();
        assert_eq!(BudgetSpec::degree_costs(&g, 2.0).unwrap().costs, vec![1.0, 1.0, 1.0]);
        assert!(BudgetSpec::new(-1.0, vec![1.0]).is_err());
        assert!(BudgetSpec::new(1.0, vec![0.0]).is_err());
    }

    #[test]
    fn degree_strategy_picks_star_center() {
        let g = star(4);
        let budget = BudgetSpec::degree_costs(&g, 4.0).unwrap();
        let x = Array2::from_elem((5, 3), 50.0);
        let cfg = AttackConfig::default();
        let sel = select_nodes(SelectionStrategy::Degree, &g, &mean_model(), &x, &budget, &cfg, 0).unwrap();
        assert_eq!(sel.set.nodes(), &[0]);
    }

    #[test]
    fn random_strategy_is_seed_deterministic() {
        let g = star(8);
        let budget = BudgetSpec::degree_costs(&g, 4.0).unwrap();
        let x = Array2::from_elem((9, 3), 50.0);
        let cfg = AttackConfig::default();
        let run = |seed| {
            select_nodes(SelectionStrategy::Random, &g, &mean_model(), &x, &budget, &cfg, seed)
                .unwrap()
                .set
        };
        assert_eq!(run(3), run(3));
        assert!(budget.is_feasible(&run(3)));
    }

    #[test]
    fn kmedoids_respects_budget_and_seed() {
        let g = star(6);
        let budget = BudgetSpec::degree_costs(&g, 3.0).unwrap();
        let x = Array2::from_elem((7, 2), 50.0);
        let cfg = AttackConfig::default();
        let a = select_nodes(SelectionStrategy::KMedoids, &g, &mean_model(), &x, &budget, &cfg, 1).unwrap();
        let b = select_nodes(SelectionStrategy::KMedoids, &g, &mean_model(), &x, &budget, &cfg, 1).unwrap();
        assert_eq!(a.set, b.set);
        assert!(!a.set.is_empty());
        assert!(budget.is_feasible(&a.set));
    }

    #[test]
    fn kmedoids_without_positions_is_an_error() {
        let g = Graph::build(&[(0, 1)], 2, true).unwrap();
        let budget = BudgetSpec::degree_costs(&g, 3.0).unwrap();
        let x = Array2::from_elem((2, 2), 50.0);
        let r = select_nodes(SelectionStrategy::KMedoids, &g, &mean_model(), &x, &budget, &AttackConfig::default(), 0);
        assert!(r.is_err());
    }

    #[test]
    fn constant_model_has_zero_utilities() {
        let x = Array2::from_elem((4, 3), 50.0);
        let model = FnModel(|x: &Array2<f64>| Array2::from_elem((x.nrows(), 1), 42.0));
        let u = estimate_utilities_spsa(&model, &x, &AttackConfig::default()).unwrap();
        assert_eq!(u.values, vec![0.0; 4]);
        assert_eq!(u.provenance, Provenance::SpsaProbe);
    }

    #[test]
    fn insensitive_isolated_node_has_zero_utility() {
        // node 2 neither feeds nor is fed by anything
        let model = FnModel(|x: &Array2<f64>| {
            let mut y = Array2::zeros((x.nrows(), 1));
            y[[0, 0]] = x[[0, 0]] + x[[1, 0]];
            y[[1, 0]] = x[[1, 1]];
            y[[2, 0]] = 30.0;
            y
        });
        let x = Array2::from_elem((3, 2), 50.0);
        let u = estimate_utilities_spsa(&model, &x, &AttackConfig::default()).unwrap();
        assert_eq!(u.values[2], 0.0);
    }

    #[test]
    fn kg_spsa_with_zero_budget_does_nothing() {
        let x = Array2::from_elem((3, 2), 50.0);
        let budget = BudgetSpec::new(0.0, vec![1.0; 3]).unwrap();
        let cfg = AttackConfig {
            max_iter: 50,
            ..AttackConfig::default()
        };
        let out = kg_spsa(&mean_model(), &x, &budget, &cfg).unwrap();
        assert!(out.set.is_empty());
        assert_eq!(out.attack.influence.total, 0.0);
        assert!(out.attack.perturbation.matrix().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in SelectionStrategy::ALL {
            assert_eq!(s.name().parse::<SelectionStrategy>().unwrap(), s);
        }
        assert_eq!("kg_spsa".parse::<SelectionStrategy>().unwrap(), SelectionStrategy::KgSpsa);
        assert!("pagerankx".parse::<SelectionStrategy>().is_err());
    }
}

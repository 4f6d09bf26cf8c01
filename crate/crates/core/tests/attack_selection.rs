mod common;

use diffattack::attack::{
    run_attack, run_attack_observed, sample_masked_rademacher, satisfies_constraints, spsa_gradient, AttackConfig,
    AttackSet,
};
use diffattack::graph::Graph;
use diffattack::predictor::FnModel;
use diffattack::selection::{best_subset_value, knapsack_greedy, select_nodes, BudgetSpec, SelectionStrategy};
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

use common::{positive_matrix, random_gcn, random_graph, rng};

fn gcn_model(graph: &Graph, window: usize, seed: u64) -> impl diffattack::BlackBoxModel {
    let mut r = rng(seed);
    let net = random_gcn(window, &[4], 2, &mut r);
    let a_hat = graph.normalized_adjacency();
    FnModel(move |x: &Array2<f64>| net.forward(&a_hat, x.view()).unwrap())
}

#[test]
fn spsa_estimates_average_to_the_quadratic_gradient() {
    let mut r = rng(1);
    let target = Array2::from_shape_fn((3, 2), |(i, j)| (i as f64) - (j as f64) * 0.5);
    let u = Array2::from_shape_fn((3, 2), |(i, j)| 0.3 * (i + j) as f64);
    let analytic = (&u - &target) * -2.0;
    let set = AttackSet::all(3);
    let trials = 20_000;
    let mut mean = Array2::<f64>::zeros((3, 2));
    for _ in 0..trials {
        let delta = sample_masked_rademacher(&set, 3, 2, &mut r).unwrap();
        let phi = |v: &Array2<f64>| Ok(-(v - &target).mapv(|d| d * d).sum());
        mean += &spsa_gradient(phi, &u, 0.05, &delta).unwrap();
    }
    mean /= trials as f64;
    // per-coordinate std of one estimate is the norm of the other gradient entries
    let total_sq: f64 = analytic.iter().map(|g| g * g).sum();
    for (m, g) in mean.iter().zip(&analytic) {
        let se = ((total_sq - g * g) / trials as f64).sqrt();
        assert!((m - g).abs() <= 5.0 * se + 1e-12, "mean {m} vs {g} (se {se})");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn every_iterate_respects_box_and_support(
        seed in any::<u64>(),
        n in 2usize..12,
        window in 1usize..5,
        eps_minus in 0.1f64..1.0,
        eps_plus in 0.1f64..1.0,
    ) {
        let mut r = rng(seed);
        let graph = random_graph(n, 0.3, true, &mut r);
        let model = gcn_model(&graph, window, seed);
        let x = positive_matrix(n, window, &mut r);
        let k = r.gen_range(1..=n);
        let set = AttackSet::new((0..n).filter(|_| r.gen_bool(k as f64 / n as f64)), n).unwrap();
        let cfg = AttackConfig { eps_minus, eps_plus, max_iter: 60, seed, ..Default::default() };
        let mut seen = 0;
        let out = run_attack_observed(&model, &x, &set, &cfg, |_, u| {
            assert!(satisfies_constraints(u, &x, &cfg, &set));
            seen += 1;
        }).unwrap();
        let expected_iters = if set.is_empty() { 0 } else { 60 };
        prop_assert_eq!(seen, expected_iters);
        prop_assert_eq!(out.evaluations, 2 * expected_iters + 2);
        prop_assert!(satisfies_constraints(out.perturbation.matrix(), &x, &cfg, &set));
        let drift = (&out.adversarial - &x - out.perturbation.matrix()).mapv(f64::abs);
        prop_assert!(drift.iter().all(|&d| d <= 1e-12));
    }

    #[test]
    fn selections_are_feasible_and_edge_budgets_behave(seed in any::<u64>(), n in 2usize..14, frac in 0.0f64..1.0) {
        let mut r = rng(seed);
        let positions: Vec<[f64; 2]> = (0..n).map(|_| [r.gen(), r.gen()]).collect();
        let graph = random_graph(n, 0.3, true, &mut r).with_positions(positions).unwrap();
        let model = gcn_model(&graph, 3, seed);
        let x = positive_matrix(n, 3, &mut r);
        let costs = BudgetSpec::degree_costs(&graph, 0.0).unwrap();
        let all = costs.total_cost();
        let cfg = AttackConfig { probe_iter: 20, ..Default::default() };
        for strategy in SelectionStrategy::ALL {
            let pick = |total: f64| {
                let budget = costs.with_total(total).unwrap();
                let sel = select_nodes(strategy, &graph, &model, &x, &budget, &cfg, seed).unwrap();
                assert!(budget.is_feasible(&sel.set), "{strategy} over budget");
                assert_eq!(sel.scores.len(), n);
                sel.set
            };
            prop_assert!(pick(0.0).is_empty());
            pick(frac * all);
            prop_assert_eq!(pick(all).len(), n, "{} with the full budget", strategy);
        }
    }
}

/// Random knapsack instances: integer costs 1..=10, utilities in [0, 1),
/// budget uniform in [0, total cost].
fn random_instance(r: &mut impl Rng) -> (Vec<f64>, BudgetSpec) {
    let n = r.gen_range(1..=15);
    let utilities: Vec<f64> = (0..n).map(|_| r.gen()).collect();
    let costs: Vec<f64> = (0..n).map(|_| f64::from(r.gen_range(1u8..=10))).collect();
    let total: f64 = costs.iter().sum();
    (utilities, BudgetSpec::new(r.gen_range(0.0..=total), costs).unwrap())
}

#[test]
fn greedy_is_feasible_and_never_beats_enumeration() {
    let mut r = rng(77);
    for _ in 0..500 {
        let (u, budget) = random_instance(&mut r);
        let set = knapsack_greedy(&u, &budget);
        assert!(budget.is_feasible(&set));
        let value: f64 = set.nodes().iter().map(|&i| u[i]).sum();
        assert!(value <= best_subset_value(&u, &budget) + 1e-12);
    }
}

#[test]
fn ratio_greedy_can_be_far_from_optimal() {
    // a cheap item with a slightly better ratio blocks the single big one
    let budget = BudgetSpec::new(10.0, vec![1.0, 10.0]).unwrap();
    let u = [2.0, 10.0];
    let set = knapsack_greedy(&u, &budget);
    assert_eq!(set.nodes(), &[0]);
    assert_eq!(best_subset_value(&u, &budget), 10.0);
}

#[test]
fn empty_attack_set_costs_two_calls() {
    let x = Array2::from_elem((3, 2), 10.0);
    let model = FnModel(|x: &Array2<f64>| x.clone());
    let out = run_attack(&model, &x, &AttackSet::empty(), &AttackConfig::default()).unwrap();
    assert_eq!(out.evaluations, 2);
    assert!(out.influence.phi.iter().all(|&p| p == 0.0));
}

//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test --release --test acceptance` runs everything; pass criterion
//! numbers (`-- 5 7`) to run a subset. Set `ACCEPTANCE_STRICT=1` to exit
//! nonzero when any criterion fails.

mod common;

use std::time::{Duration, Instant};

use diffattack::attack::{
    run_attack, run_attack_observed, sample_masked_rademacher, satisfies_constraints, spsa_gradient, AttackConfig,
    AttackSet,
};
use diffattack::cli;
use diffattack::evaluation::{
    budget_sweep, comparison_table, evaluate_strategy, hop_curve_from_phi, select_windows, ModelVariant, TestWindow,
};
use diffattack::graph::Graph;
use diffattack::io::config::DEFAULT_BUDGETS;
use diffattack::io::{RunConfig, SpeedDataset};
use diffattack::predictor::{train, DropMode, GcnPredictor, TrainedModel, TrainingConfig, WindowedDataset};
use diffattack::selection::{best_subset_value, knapsack_greedy, select_nodes, BudgetSpec, SelectionStrategy};
use diffattack::BlackBoxModel;
use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;

use common::{positive_matrix, random_gcn, random_graph, rng};

const SEEDS: u64 = 10;
const WINDOWS_PER_SEED: usize = 2;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Default benchmark with a trained baseline model, built once.
struct Fixture {
    cfg: RunConfig,
    graph: Graph,
    data: SpeedDataset,
    dataset: WindowedDataset,
    model: TrainedModel,
    accuracy: f64,
    rmse: f64,
    train_time: Duration,
}

impl Fixture {
    fn build() -> Self {
        let cfg = RunConfig::default();
        let (graph, data) = cli::load_inputs(&cfg).unwrap();
        let dataset = WindowedDataset::new(data.speeds.clone(), cfg.window, cfg.horizon, cfg.training.train_fraction)
            .unwrap();
        let started = Instant::now();
        let outcome = cli::train_model(&cfg, &graph, &dataset).unwrap();
        Self {
            accuracy: outcome.history.test_accuracy,
            rmse: outcome.history.test_rmse,
            train_time: started.elapsed(),
            model: outcome.model,
            cfg,
            graph,
            data,
            dataset,
        }
    }

    /// Nominal budget `b` on degree costs, auto-scaled.
    fn budget(&self, b: f64) -> BudgetSpec {
        let costs = BudgetSpec::degree_costs(&self.graph, 0.0).unwrap();
        let scale = self.cfg.budget_scale.factor(costs.total_cost());
        costs.with_total(b * scale).unwrap()
    }

    fn windows(&self, seed: u64) -> Vec<TestWindow> {
        select_windows(&self.dataset, WINDOWS_PER_SEED, seed)
    }

    fn attack_cfg(&self) -> AttackConfig {
        self.cfg.attack.clone()
    }
}

fn locality() -> Verdict {
    let mut r = rng(101);
    let mut worst = 0.0f64;
    let mut inside_changed = 0;
    for _ in 0..100 {
        let n = r.gen_range(2..=30);
        let layers = r.gen_range(1..=3);
        let graph = random_graph(n, r.gen_range(0.03..0.2), r.gen_bool(0.5), &mut r);
        let hidden: Vec<usize> = (0..layers).map(|_| r.gen_range(2..8)).collect();
        let net = random_gcn(6, &hidden, 3, &mut r);
        let a_hat = graph.normalized_adjacency();
        let x = positive_matrix(n, 6, &mut r);
        let h = r.gen_range(0..n);
        let mut x2 = x.clone();
        x2.row_mut(h).mapv_inplace(|v| v * r.gen_range(0.0..1.5));
        let y = net.forward(&a_hat, x.view()).unwrap();
        let y2 = net.forward(&a_hat, x2.view()).unwrap();
        let mut changed = false;
        for i in 0..n {
            let diff = (&y.row(i) - &y2.row(i)).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
            if graph.k_hop_neighbors(i, layers).unwrap().contains(&h) {
                changed |= diff > 0.0;
            } else {
                worst = worst.max(diff);
            }
        }
        inside_changed += usize::from(changed);
    }
    verdict(
        worst <= 1e-9,
        format!("100 random GCNs, max |dy| outside L hops = {worst:e}; {inside_changed}/100 changed inside"),
    )
}

fn spsa_fidelity() -> Verdict {
    let mut r = rng(202);
    let target = Array2::from_shape_vec((2, 2), vec![1.0, -0.5, 0.25, 2.0]).unwrap();
    let u = Array2::from_shape_vec((2, 2), vec![-0.5, 0.75, 1.5, 0.5]).unwrap();
    let analytic = (&u - &target) * -2.0;
    let set = AttackSet::all(2);
    let trials = 10_000;
    let mut mean = Array2::<f64>::zeros((2, 2));
    for n in 1..=trials {
        let delta = sample_masked_rademacher(&set, 2, 2, &mut r).unwrap();
        let c_n = 0.1 / (n as f64).powf(0.101);
        let phi = |v: &Array2<f64>| Ok(-(v - &target).mapv(|d| d * d).sum());
        mean += &spsa_gradient(phi, &u, c_n, &delta).unwrap();
    }
    mean /= trials as f64;
    let worst = mean
        .iter()
        .zip(&analytic)
        .map(|(m, g)| (m - g).abs() / g.abs())
        .fold(0.0f64, f64::max);
    verdict(
        worst <= 0.05,
        format!("10^4 estimates on a 2x2 quadratic, worst relative error {:.3}%", 100.0 * worst),
    )
}

fn box_constraints(f: &Fixture) -> Verdict {
    let window = &f.windows(0)[0];
    let budget = f.budget(50.0);
    let cfg = f.attack_cfg();
    let set = select_nodes(SelectionStrategy::KgSpsa, &f.graph, &f.model, &window.x, &budget, &cfg, 3)
        .unwrap()
        .set;
    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut check = |cfg: &AttackConfig| {
        let out = run_attack_observed(&f.model, &window.x, &set, cfg, |_, u| {
            checked += 1;
            violations += usize::from(!satisfies_constraints(u, &window.x, cfg, &set));
        })
        .unwrap();
        violations += usize::from(!satisfies_constraints(out.perturbation.matrix(), &window.x, cfg, &set));
    };
    check(&AttackConfig {
        max_iter: 1_000,
        ..cfg.clone()
    });
    check(&cfg);
    verdict(
        violations == 0 && checked == 1_000 + cfg.max_iter,
        format!(
            "{checked} post-clip iterates over runs of 1000 and {} iterations, |P| = {}, {violations} violations",
            cfg.max_iter,
            set.len()
        ),
    )
}

fn greedy_gap() -> Verdict {
    let mut r = rng(404);
    let mut infeasible = 0;
    let mut below_half = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..500 {
        let n = r.gen_range(1..=15);
        let utilities: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..1.0)).collect();
        let costs: Vec<f64> = (0..n).map(|_| f64::from(r.gen_range(1u8..=10))).collect();
        let total: f64 = costs.iter().sum();
        let budget = BudgetSpec::new(f64::from(r.gen_range(0..=total as u32)), costs).unwrap();
        let set = knapsack_greedy(&utilities, &budget);
        infeasible += usize::from(!budget.is_feasible(&set));
        let value: f64 = set.nodes().iter().map(|&i| utilities[i]).sum();
        let best = best_subset_value(&utilities, &budget);
        if best > 0.0 {
            let ratio = value / best;
            worst = worst.min(ratio);
            below_half += usize::from(ratio < 0.5);
        }
    }
    verdict(
        infeasible == 0 && below_half == 0,
        format!(
            "500 instances (N <= 15, integer costs 1..10): {infeasible} infeasible, {below_half} below half of optimum, worst ratio {worst:.3}"
        ),
    )
}

fn strategy_ordering(f: &Fixture) -> Verdict {
    let strategies = [
        SelectionStrategy::KgSpsa,
        SelectionStrategy::Spsa,
        SelectionStrategy::Random,
        SelectionStrategy::KgPagerank,
        SelectionStrategy::Pagerank,
        SelectionStrategy::KgBetweenness,
        SelectionStrategy::Betweenness,
    ];
    let budget = f.budget(50.0);
    let cfg = f.attack_cfg();
    // aai[strategy][seed]
    let mut aai = vec![Vec::new(); strategies.len()];
    for seed in 0..SEEDS {
        let windows = f.windows(seed);
        for (k, &s) in strategies.iter().enumerate() {
            aai[k].push(evaluate_strategy(&f.model, &f.graph, &windows, s, &budget, &cfg, seed).unwrap().aai);
        }
    }
    let mean = |k: usize| aai[k].iter().sum::<f64>() / SEEDS as f64;
    let wins = |a: usize, b: usize| (0..SEEDS as usize).filter(|&s| aai[a][s] >= aai[b][s]).count();
    let pairs = [(0, 1, "KG-SPSA >= SPSA"), (1, 2, "SPSA >= Random"), (3, 4, "KG-PageRank >= PageRank")];
    let mut pass = true;
    let mut parts = Vec::new();
    for (a, b, label) in pairs {
        let w = wins(a, b);
        pass &= w >= 8;
        parts.push(format!("{label} {w}/10"));
    }
    let means: Vec<String> = strategies
        .iter()
        .enumerate()
        .map(|(k, s)| format!("{s} {:.2}", mean(k)))
        .collect();
    parts.push(format!("KG-Betweenness >= Betweenness {}/10 (info)", wins(5, 6)));
    verdict(
        pass,
        format!("B=50 (applied {}), paired seeds: {}; seed-mean AAI: {}", budget.total, parts.join(", "), means.join(", ")),
    )
}

fn budget_monotonicity(f: &Fixture) -> Verdict {
    let costs = BudgetSpec::degree_costs(&f.graph, 0.0).unwrap();
    let scale = f.cfg.budget_scale.factor(costs.total_cost());
    let cfg = f.attack_cfg();
    let mut sums = vec![0.0; DEFAULT_BUDGETS.len()];
    for seed in 0..SEEDS {
        let rows = budget_sweep(
            &f.model,
            &f.graph,
            &f.windows(seed),
            SelectionStrategy::KgSpsa,
            &costs,
            &DEFAULT_BUDGETS,
            scale,
            &cfg,
            seed,
        )
        .unwrap();
        for (acc, r) in sums.iter_mut().zip(&rows) {
            *acc += r.aai;
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / SEEDS as f64).collect();
    let inversions = means.windows(2).filter(|w| w[1] < w[0]).count();
    let shown: Vec<String> = DEFAULT_BUDGETS
        .iter()
        .zip(&means)
        .map(|(b, m)| format!("B={b}: {m:.2}"))
        .collect();
    verdict(
        inversions <= 1,
        format!("KG-SPSA seed-mean AAI {}; {inversions} adjacent inversions", shown.join(", ")),
    )
}

fn hop_decay(f: &Fixture) -> Verdict {
    let layers = f.model.n_layers();
    let n = f.graph.n_nodes();
    let nodes = sample(&mut rng(707), n, 30).into_vec();
    let windows = select_windows(&f.dataset, 30, 707);
    let cfg = f.attack_cfg();
    let mut ordered = 0;
    let mut far_max = 0.0f64;
    for (k, &node) in nodes.iter().enumerate() {
        let set = AttackSet::new([node], n).unwrap();
        let out = run_attack(&f.model, &windows[k].x, &set, &cfg.with_seed(k as u64)).unwrap();
        let curve = hop_curve_from_phi(&f.graph, node, &out.influence.phi).unwrap();
        ordered += usize::from(curve.at(0) > curve.at(1) && curve.at(1) > curve.at(2));
        let dist = f.graph.bfs_distances_to(node);
        for (i, d) in dist.iter().enumerate() {
            if d.is_none_or(|d| d > layers) {
                far_max = far_max.max(out.influence.phi[i].abs());
            }
        }
    }
    verdict(
        ordered * 10 >= 30 * 9 && far_max == 0.0,
        format!("hop0 > hop1 > hop2 in {ordered}/30 single-node attacks; max |phi| beyond {layers} hops = {far_max:e}"),
    )
}

fn drop_grid(f: &Fixture) -> Verdict {
    let modes = [DropMode::DropOut, DropMode::DropNode, DropMode::DropEdge];
    let mut models = Vec::new();
    let mut accuracies = Vec::new();
    for mode in modes {
        let training = TrainingConfig {
            drop_mode: mode,
            ..f.cfg.training_config()
        };
        let net = GcnPredictor::new(f.cfg.window, &f.cfg.hidden, f.cfg.horizon, 11).unwrap();
        let out = train(net, &f.dataset, &f.graph, &training).unwrap();
        accuracies.push(out.history.test_accuracy);
        models.push(out.model);
    }
    let names = ["original", "drop_out", "drop_node", "drop_edge"];
    let all: Vec<&TrainedModel> = std::iter::once(&f.model).chain(&models).collect();
    let variants: Vec<ModelVariant<'_>> = names
        .iter()
        .zip(&all)
        .map(|(name, &m)| ModelVariant {
            name,
            model: m as &dyn BlackBoxModel,
        })
        .collect();
    let table = comparison_table(
        &variants,
        &SelectionStrategy::ALL,
        &f.graph,
        &f.windows(0),
        &f.budget(50.0),
        &f.attack_cfg(),
        0,
    )
    .unwrap();
    let kg = |v: &str| table.report(SelectionStrategy::KgSpsa, v).unwrap().aai;
    let all_nonzero = names[1..]
        .iter()
        .all(|v| SelectionStrategy::ALL.iter().any(|&s| table.report(s, v).unwrap().aai > 0.0) && kg(v) > 0.0);
    let accurate = accuracies.iter().all(|&a| a >= 0.80);
    let detail: Vec<String> = names[1..]
        .iter()
        .zip(&accuracies)
        .map(|(v, a)| format!("{v}: accuracy {a:.3}, KG-SPSA AAI {:.2}", kg(v)))
        .collect();
    println!("{}", table.to_text().trim_end());
    verdict(accurate && all_nonzero, detail.join("; "))
}

fn predictor_sanity(f: &Fixture) -> Verdict {
    let n = f.graph.n_nodes();
    let constant = Array2::from_elem((f.data.total_steps(), n), f.cfg.synthetic.mean_speed);
    let dataset = WindowedDataset::new(constant, f.cfg.window, f.cfg.horizon, 0.8).unwrap();
    let flat = cli::train_model(&f.cfg, &f.graph, &dataset).unwrap();
    let pass = f.accuracy >= 0.85 && f.rmse.is_finite() && flat.history.test_rmse < 0.5;
    verdict(
        pass,
        format!(
            "benchmark accuracy {:.4}, RMSE {:.3} km/h (trained in {:.1}s); constant dataset RMSE {:.4} km/h",
            f.accuracy,
            f.rmse,
            f.train_time.as_secs_f64(),
            flat.history.test_rmse
        ),
    )
}

fn determinism(f: &Fixture) -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let ckpt = tmp.path().join("model.ckpt");
    f.model.checkpoint().save(&ckpt).unwrap();
    std::fs::write(
        tmp.path().join("run.cfg"),
        "checkpoint=model.ckpt\nmax_iter=2000\nwindows=2\n",
    )
    .unwrap();
    let files = ["summary.csv", "comparison.csv", "sweep.csv", "per_node_phi.csv", "hop_curve.csv"];
    let mut runs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("report{k}"));
        let cfg = tmp.path().join("run.cfg");
        let status = cli::run([
            "diffattack".as_ref(),
            "report".as_ref(),
            "--config".as_ref(),
            cfg.as_os_str(),
            "--out".as_ref(),
            out.as_os_str(),
        ]);
        assert_eq!(status, 0, "report run {k} failed");
        runs.push(files.map(|name| std::fs::read(out.join(name)).unwrap()));
    }
    let same = files.iter().enumerate().filter(|(k, _)| runs[0][*k] == runs[1][*k]).count();
    verdict(
        same == files.len(),
        format!("two `report` runs: {same}/{} CSVs byte-identical", files.len()),
    )
}

type Criterion<'a> = (u32, &'a str, Duration, Box<dyn Fn() -> Verdict + 'a>);

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let selected = |k: u32| wanted.is_empty() || wanted.contains(&k);
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let needs_fixture = [3, 5, 6, 7, 8, 9, 10].into_iter().any(selected);
    let fixture = needs_fixture.then(|| {
        let f = Fixture::build();
        println!(
            "fixture: {} nodes, {} edges, accuracy {:.4}, trained in {:.1}s",
            f.graph.n_nodes(),
            f.graph.n_edges(),
            f.accuracy,
            f.train_time.as_secs_f64()
        );
        f
    });
    let fx = || fixture.as_ref().unwrap();
    let min = |m: u64| Duration::from_secs(60 * m);
    let criteria: Vec<Criterion<'_>> = vec![
        (1, "locality oracle", min(1), Box::new(locality)),
        (2, "SPSA gradient fidelity", Duration::from_secs(30), Box::new(spsa_fidelity)),
        (3, "box and support constraints", min(1), Box::new(|| box_constraints(fx()))),
        (4, "greedy correctness", min(1), Box::new(greedy_gap)),
        (5, "strategy ordering", min(30), Box::new(|| strategy_ordering(fx()))),
        (6, "budget monotonicity", min(30), Box::new(|| budget_monotonicity(fx()))),
        (7, "hop decay", min(10), Box::new(|| hop_decay(fx()))),
        (8, "drop-regularization grid", min(45), Box::new(|| drop_grid(fx()))),
        (9, "predictor sanity", min(10), Box::new(|| predictor_sanity(fx()))),
        (10, "determinism", min(10), Box::new(|| determinism(fx()))),
    ];
    let mut failed = Vec::new();
    for (k, name, limit, run) in criteria {
        if !selected(k) {
            continue;
        }
        let started = Instant::now();
        let v = run();
        let mut elapsed = started.elapsed();
        if k == 9 {
            elapsed += fx().train_time;
        }
        let in_time = elapsed <= limit;
        let pass = v.pass && in_time;
        if !pass {
            failed.push(k);
        }
        let timing = if in_time { "" } else { " [over time limit]" };
        println!(
            "{} {k:>2} {name} ({:.1}s / {}s){timing}: {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            v.detail
        );
    }
    if failed.is_empty() {
        println!("all selected criteria passed");
    } else {
        println!("failed criteria: {failed:?}");
        if strict {
            std::process::exit(1);
        }
    }
}

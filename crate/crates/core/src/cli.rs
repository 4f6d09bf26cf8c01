//! The `diffattack` command line.
//!
//! Every subcommand reads a [`RunConfig`] (from `--config` or defaults),
//! applies flag overrides, and writes its files into a staged directory that
//! is renamed into place only after everything succeeded. Failures print one
//! JSON line `{"error": kind, "message": text}` to stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::attack::{run_attack, AttackConfig, AttackSet};
use crate::error::{Error, Result};
use crate::evaluation::{
    aai, aair, attack_window, budget_sweep, comparison_table, evaluate_strategy, hop_csv, hop_influence,
    line_chart_svg, node_map_svg, per_node_csv, perturbation_csv, select_windows, selection_csv, summary_csv,
    sweep_csv, window_seed, windows_csv, AttackReport, HopCurve, ModelVariant, TestWindow, WindowResult,
};
use crate::graph::Graph;
use crate::io::{
    adjacency_csv_string, derive_seed, generate_synthetic, load_graph, load_speed_csv, positions_csv_string,
    speed_csv_string, OutputDir, RunConfig, SpeedDataset,
};
use crate::predictor::{
    train, BlackBoxModel, Checkpoint, DropMode, GcnPredictor, TrainOutcome, TrainedModel, WindowedDataset,
};
use crate::selection::{select_nodes, BudgetSpec, SelectionStrategy};

/// Worker-pool size for evaluation fan-out.
pub const THREADS_ENV: &str = "DIFFATTACK_THREADS";

#[derive(Debug, Parser)]
#[command(name = "diffattack", version, about = "Black-box diffusion attacks on GCN traffic predictors")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand; each overrides the matching config key.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Flat key=value run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,
    /// Selection strategy, e.g. kg-spsa, pagerank, random.
    #[arg(long, global = true, value_name = "NAME")]
    pub strategy: Option<SelectionStrategy>,
    /// Budget in nominal units, scaled by `budget_scale`.
    #[arg(long, global = true, value_name = "REAL")]
    pub budget: Option<f64>,
    /// Output directory; replaced atomically.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Number of sampled test windows.
    #[arg(long, global = true, value_name = "INT")]
    pub windows: Option<usize>,
    /// Trained model checkpoint; without one the model is trained in-process.
    #[arg(long, global = true, value_name = "PATH")]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write a synthetic benchmark (speeds, adjacency, positions, run.cfg).
    Gen,
    /// Train the GCN predictor and save a checkpoint.
    Train,
    /// Attack one test window with a fixed or selected node set.
    Attack,
    /// Rank nodes with a strategy and pick an attack set under the budget.
    Select,
    /// AAI/AAIR over sampled windows plus a hop-decay curve.
    Evaluate,
    /// AAI/AAIR across the budget grid.
    Sweep,
    /// Strategy-by-model comparison table, curves and plots.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Train => "train",
            Command::Attack => "attack",
            Command::Select => "select",
            Command::Evaluate => "evaluate",
            Command::Sweep => "sweep",
            Command::Report => "report",
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let message = e.kind().to_string();
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or(&message).trim_start_matches("error: ");
            eprintln!("{}", error_line("usage", first));
            return 2;
        }
    };
    match execute(&cli) {
        Ok(dir) => {
            println!("{}: wrote {}", cli.command.name(), dir.display());
            0
        }
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            1
        }
    }
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

/// Runs a parsed command and returns the committed output directory.
pub fn execute(cli: &Cli) -> Result<PathBuf> {
    init_threads()?;
    let cfg = resolve_config(&cli.global)?;
    let target = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("diffattack-{}", cli.command.name())));
    let out = OutputDir::stage(&target)?;
    let started = Instant::now();
    match cli.command {
        Command::Gen => cmd_gen(&cfg, &out)?,
        Command::Train => cmd_train(&cfg, &out)?,
        Command::Attack => cmd_attack(&cfg, &out)?,
        Command::Select => cmd_select(&cfg, &out)?,
        Command::Evaluate => cmd_evaluate(&cfg, &out)?,
        Command::Sweep => cmd_sweep(&cfg, &out)?,
        Command::Report => cmd_report(&cfg, &out)?,
    }
    out.write("timing.txt", &format!("seconds={}\n", started.elapsed().as_secs_f64()))?;
    out.commit()
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    // a pool built by an earlier call in the same process is kept
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Config file (if any) with flag overrides applied, validated.
pub fn resolve_config(args: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(strategy) = args.strategy {
        cfg.strategy = strategy;
    }
    if let Some(budget) = args.budget {
        cfg.budget = budget;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(windows) = args.windows {
        cfg.windows = windows;
    }
    if let Some(path) = &args.checkpoint {
        cfg.checkpoint = Some(path.clone());
    }
    cfg.validate()?;
    cfg.check_files()?;
    Ok(cfg)
}

/// Graph and speeds from CSV when `data` and `adjacency` are set, otherwise
/// the synthetic benchmark.
pub fn load_inputs(cfg: &RunConfig) -> Result<(Graph, SpeedDataset)> {
    match (&cfg.data, &cfg.adjacency) {
        (Some(data), Some(adjacency)) => {
            let graph = load_graph(adjacency, cfg.positions.as_deref())?;
            let speeds = load_speed_csv(data)?;
            if speeds.n_nodes() != graph.n_nodes() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} speed columns", graph.n_nodes()),
                    actual: speeds.n_nodes().to_string(),
                });
            }
            Ok((graph, speeds))
        }
        (None, None) => generate_synthetic(&cfg.synthetic_spec()),
        _ => Err(Error::Config("data and adjacency must be given together".into())),
    }
}

fn windowed(cfg: &RunConfig, data: &SpeedDataset) -> Result<WindowedDataset> {
    WindowedDataset::new(data.speeds.clone(), cfg.window, cfg.horizon, cfg.training.train_fraction)
}

/// Trains a fresh predictor with the config's architecture and seeds.
pub fn train_model(cfg: &RunConfig, graph: &Graph, dataset: &WindowedDataset) -> Result<TrainOutcome> {
    let net = GcnPredictor::new(cfg.window, &cfg.hidden, cfg.horizon, derive_seed(cfg.seed, "init"))?;
    train(net, dataset, graph, &cfg.training_config())
}

fn load_model(path: &Path, graph: &Graph) -> Result<TrainedModel> {
    TrainedModel::bind(Checkpoint::load(path)?, graph)
}

fn baseline_model(cfg: &RunConfig, graph: &Graph, dataset: &WindowedDataset) -> Result<TrainedModel> {
    match &cfg.checkpoint {
        Some(path) => load_model(path, graph),
        None => {
            eprintln!("no checkpoint given; training {} epochs in-process", cfg.training.epochs);
            Ok(train_model(cfg, graph, dataset)?.model)
        }
    }
}

/// Everything the attack-side commands share.
struct Session {
    cfg: RunConfig,
    attack: AttackConfig,
    graph: Graph,
    data: SpeedDataset,
    dataset: WindowedDataset,
    model: TrainedModel,
    costs: BudgetSpec,
    scale: f64,
}

impl Session {
    fn open(cfg: &RunConfig) -> Result<Self> {
        let (graph, data) = load_inputs(cfg)?;
        let dataset = windowed(cfg, &data)?;
        let model = baseline_model(cfg, &graph, &dataset)?;
        let costs = BudgetSpec::degree_costs(&graph, 0.0)?;
        let scale = cfg.budget_scale.factor(costs.total_cost());
        Ok(Self {
            attack: cfg.attack_config(),
            cfg: cfg.clone(),
            graph,
            data,
            dataset,
            model,
            costs,
            scale,
        })
    }

    fn budget(&self) -> Result<BudgetSpec> {
        self.costs.with_total(self.cfg.budget * self.scale)
    }

    fn windows(&self) -> Vec<TestWindow> {
        select_windows(&self.dataset, self.cfg.windows, self.cfg.seed)
    }

    /// `window_start` if set, otherwise the first sampled window.
    fn single_window(&self) -> Result<TestWindow> {
        match self.cfg.window_start {
            Some(start) => {
                let last = self.dataset.speeds().nrows().saturating_sub(self.cfg.window + self.cfg.horizon);
                if start > last {
                    return Err(Error::Config(format!("window_start {start} exceeds last valid start {last}")));
                }
                Ok(TestWindow {
                    start,
                    x: self.dataset.sample(start).0,
                })
            }
            None => self
                .windows()
                .into_iter()
                .next()
                .ok_or_else(|| Error::Config("no test windows; lower train_fraction or add data".into())),
        }
    }

    fn hop_node(&self) -> usize {
        self.cfg.hop_node.unwrap_or_else(|| {
            let degrees = self.graph.degrees();
            (0..degrees.len()).max_by_key(|&i| (degrees[i], std::cmp::Reverse(i))).unwrap_or(0)
        })
    }

    fn hop_curve(&self, window: &TestWindow) -> Result<HopCurve> {
        let seed = derive_seed(window_seed(self.cfg.seed, 0), "hop");
        hop_influence(&self.model, &window.x, &self.graph, self.hop_node(), &self.attack.with_seed(seed))
    }
}

fn variant_name(mode: DropMode) -> &'static str {
    match mode {
        DropMode::None => "original",
        other => other.name(),
    }
}

fn cmd_gen(cfg: &RunConfig, out: &OutputDir) -> Result<()> {
    let (graph, data) = load_inputs(cfg)?;
    out.write("speeds.csv", &speed_csv_string(&data))?;
    out.write("adjacency.csv", &adjacency_csv_string(&graph))?;
    let mut run = String::from("data=speeds.csv\nadjacency=adjacency.csv\n");
    if let Some(positions) = graph.positions() {
        out.write("positions.csv", &positions_csv_string(positions))?;
        run.push_str("positions=positions.csv\n");
    }
    let _ = writeln!(run, "seed={}", cfg.seed);
    out.write("run.cfg", &run)?;
    let n = graph.n_nodes();
    let mean_degree = graph.degrees().iter().sum::<usize>() as f64 / n as f64;
    out.write(
        "gen_summary.csv",
        &format!(
            "n_nodes,n_edges,mean_degree,steps,interval_minutes,graph_hash\n{n},{},{mean_degree},{},{},{}\n",
            graph.n_edges(),
            data.total_steps(),
            data.interval_minutes,
            graph.hash()
        ),
    )
}

fn cmd_train(cfg: &RunConfig, out: &OutputDir) -> Result<()> {
    let (graph, data) = load_inputs(cfg)?;
    let dataset = windowed(cfg, &data)?;
    let outcome = train_model(cfg, &graph, &dataset)?;
    let h = &outcome.history;
    out.write("model.ckpt", &outcome.model.checkpoint().to_text())?;
    out.write(
        "train_summary.csv",
        &format!(
            "drop_mode,epochs,seed,accuracy,rmse,final_loss,graph_hash\n{},{},{},{},{},{},{}\n",
            cfg.training.drop_mode.name(),
            cfg.training.epochs,
            cfg.seed,
            h.test_accuracy,
            h.test_rmse,
            h.epoch_loss.last().copied().unwrap_or(f64::NAN),
            graph.hash()
        ),
    )?;
    let mut loss = String::from("epoch,loss\n");
    for (e, l) in h.epoch_loss.iter().enumerate() {
        let _ = writeln!(loss, "{e},{l}");
    }
    out.write("loss.csv", &loss)?;
    eprintln!("accuracy {:.4}, rmse {:.4} km/h", h.test_accuracy, h.test_rmse);
    Ok(())
}

fn cmd_attack(cfg: &RunConfig, out: &OutputDir) -> Result<()> {
    let s = Session::open(cfg)?;
    let window = s.single_window()?;
    let seed = window_seed(cfg.seed, 0);
    let budget = s.budget()?;
    let (label, result) = match &cfg.attack_set {
        Some(nodes) => {
            let set = AttackSet::new(nodes.iter().copied(), s.graph.n_nodes())?;
            let outcome = run_attack(&s.model, &window.x, &set, &s.attack.with_seed(derive_seed(seed, "attack")))?;
            let phi = outcome.influence.phi;
            let result = WindowResult {
                start: window.start,
                seed,
                selection_scores: vec![0.0; s.graph.n_nodes()],
                set,
                aai: aai(&phi),
                aair: aair(&phi, &outcome.influence.baseline)?,
                total: outcome.influence.total,
                evaluations: outcome.evaluations,
                perturbation: outcome.perturbation,
                phi,
            };
            ("explicit".to_string(), result)
        }
        None => {
            let result = attack_window(&s.model, &s.graph, &window, cfg.strategy, &budget, &s.attack, seed)?;
            (cfg.strategy.name().to_string(), result)
        }
    };
    out.write(
        "summary.csv",
        &format!(
            "strategy,budget,applied_budget,seed,window_start,selected,cost,aai,aair,aair_excluded,phi_total,evaluations\n\
             {label},{},{},{},{},{},{},{},{},{},{},{}\n",
            cfg.budget,
            budget.total,
            cfg.seed,
            result.start,
            result.set.len(),
            s.costs.cost_of(&result.set),
            result.aai,
            result.aair.value,
            result.aair.excluded,
            result.total,
            result.evaluations
        ),
    )?;
    out.write("perturbation.csv", &perturbation_csv(&result.perturbation))?;
    let report = AttackReport::from_windows(cfg.strategy, cfg.budget, budget.total, cfg.seed, vec![result])?;
    out.write("per_node_phi.csv", &per_node_csv(&report, &s.data.node_ids))?;
    eprintln!("AAI {:.4} km/h, AAIR {:.4}", report.aai, report.aair);
    Ok(())
}

fn cmd_select(cfg: &RunConfig, out: &OutputDir) -> Result<()> {
    let s = Session::open(cfg)?;
    let window = s.single_window()?;
    let budget = s.budget()?;
    let selection = select_nodes(
        cfg.strategy,
        &s.graph,
        &s.model,
        &window.x,
        &budget,
        &s.attack,
        window_seed(cfg.seed, 0),
    )?;
    out.write("selection.csv", &selection_csv(&selection, &budget, &s.data.node_ids))?;
    let nodes: Vec<String> = selection.set.nodes().iter().map(|i| i.to_string()).collect();
    out.write(
        "summary.csv",
        &format!(
            "strategy,budget,applied_budget,seed,window_start,selected,cost,attack_set\n{},{},{},{},{},{},{},{}\n",
            cfg.strategy,
            cfg.budget,
            budget.total,
            cfg.seed,
            window.start,
            selection.set.len(),
            s.costs.cost_of(&selection.set),
            nodes.join(" ")
        ),
    )
}

fn cmd_evaluate(cfg: &RunConfig, out: &OutputDir) -> Result<()> {
    let s = Session::open(cfg)?;
    let windows = s.windows();
    let budget = s.budget()?;
    let mut report = evaluate_strategy(&s.model, &s.graph, &windows, cfg.strategy, &budget, &s.attack, cfg.seed)?;
    report.budget = cfg.budget;
    let name = variant_name(s.model.drop_mode());
    out.write("summary.csv", &summary_csv([(name, &report)]))?;
    out.write("windows.csv", &windows_csv(&report))?;
    out.write("per_node_phi.csv", &per_node_csv(&report, &s.data.node_ids))?;
    out.write("hop_curve.csv", &hop_csv(&s.hop_curve(&windows[0])?))?;
    eprintln!("AAI {:.4} km/h, AAIR {:.4}", report.aai, report.aair);
    Ok(())
}

fn sweep_reports(s: &Session, windows: &[TestWindow]) -> Result<Vec<AttackReport>> {
    budget_sweep(
        &s.model,
        &s.graph,
        windows,
        s.cfg.strategy,
        &s.costs,
        &s.cfg.budgets,
        s.scale,
        &s.attack,
        s.cfg.seed,
    )
}

fn budget_plot(rows: &[AttackReport], strategy: SelectionStrategy) -> String {
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.budget, r.aai)).collect();
    line_chart_svg(&format!("{strategy}: AAI vs budget"), "budget", "AAI (km/h)", &points)
}

fn cmd_sweep(cfg: &RunConfig, out: &OutputDir) -> Result<()> {
    let s = Session::open(cfg)?;
    let rows = sweep_reports(&s, &s.windows())?;
    out.write("sweep.csv", &sweep_csv(&rows))?;
    if cfg.plots {
        out.write("budget_curve.svg", &budget_plot(&rows, cfg.strategy))?;
    }
    Ok(())
}

fn cmd_report(cfg: &RunConfig, out: &OutputDir) -> Result<()> {
    let s = Session::open(cfg)?;
    let mut extra = Vec::with_capacity(cfg.variant_checkpoints.len());
    for path in &cfg.variant_checkpoints {
        extra.push(load_model(path, &s.graph)?);
    }
    let models: Vec<&TrainedModel> = std::iter::once(&s.model).chain(&extra).collect();
    let mut names: Vec<String> = Vec::with_capacity(models.len());
    for m in &models {
        let base = variant_name(m.drop_mode());
        let taken = names.iter().filter(|n| n.split('#').next() == Some(base)).count();
        names.push(if taken == 0 { base.to_string() } else { format!("{base}#{}", taken + 1) });
    }
    let variants: Vec<ModelVariant<'_>> = names
        .iter()
        .zip(&models)
        .map(|(name, &m)| ModelVariant {
            name,
            model: m as &dyn BlackBoxModel,
        })
        .collect();

    let windows = s.windows();
    let budget = s.budget()?;
    let mut table = comparison_table(&variants, &cfg.strategies, &s.graph, &windows, &budget, &s.attack, cfg.seed)?;
    for row in &mut table.reports {
        for r in row {
            r.budget = cfg.budget;
        }
    }
    out.write("comparison.csv", &table.to_csv())?;
    out.write("comparison.txt", &table.to_text())?;
    let rows = table
        .strategies
        .iter()
        .zip(&table.reports)
        .flat_map(|(_, row)| names.iter().map(String::as_str).zip(row));
    out.write("summary.csv", &summary_csv(rows))?;

    let focus = match table.report(cfg.strategy, &names[0]) {
        Some(r) => r.clone(),
        None => {
            let mut r = evaluate_strategy(&s.model, &s.graph, &windows, cfg.strategy, &budget, &s.attack, cfg.seed)?;
            r.budget = cfg.budget;
            r
        }
    };
    out.write("per_node_phi.csv", &per_node_csv(&focus, &s.data.node_ids))?;
    let hop = s.hop_curve(&windows[0])?;
    out.write("hop_curve.csv", &hop_csv(&hop))?;
    let sweep = sweep_reports(&s, &windows)?;
    out.write("sweep.csv", &sweep_csv(&sweep))?;

    if cfg.plots {
        let points: Vec<(f64, f64)> = hop.mean_abs_phi.iter().enumerate().map(|(k, &m)| (k as f64, m)).collect();
        out.write(
            "hop_decay.svg",
            &line_chart_svg(&format!("influence vs hops from node {}", hop.attacked), "hop", "mean |phi| (km/h)", &points),
        )?;
        out.write("budget_curve.svg", &budget_plot(&sweep, cfg.strategy))?;
        if let Some(positions) = s.graph.positions() {
            let values: Vec<Option<f64>> = focus.phi.iter().map(|p| Some(p.abs())).collect();
            let attacked: Vec<usize> = focus
                .selection_frequency()
                .iter()
                .enumerate()
                .filter(|(_, &f)| f >= 0.5)
                .map(|(i, _)| i)
                .collect();
            out.write(
                "node_map.svg",
                &node_map_svg(&format!("{}: mean |phi| per node", cfg.strategy), positions, &values, &attacked),
            )?;
        }
    }
    eprint!("{}", table.to_text());
    Ok(())
}

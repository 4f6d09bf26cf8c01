//! Attack metrics and the experiment harness.
//!
//! Every dataset-level number here is a mean over attacked test windows. Each
//! window gets its own seed, derived from the run seed and the window's index
//! in the sampled list, so a window's result does not depend on which thread
//! ran it or on which other cells share the run.

mod hop;
mod plot;
mod report;
mod table;

use ndarray::Array2;
use rand::seq::index;
use rayon::prelude::*;

use crate::attack::{run_attack, AttackConfig, AttackSet, Perturbation};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::io::seed::{derive_indexed, derive_seed, rng_for};
use crate::predictor::{BlackBoxModel, WindowedDataset};
use crate::selection::{select_nodes, BudgetSpec, SelectionStrategy};

pub use hop::{hop_curve_from_phi, hop_influence, HopCurve};
pub use plot::{line_chart_svg, node_map_svg};
pub use report::{
    hop_csv, per_node_csv, perturbation_csv, selection_csv, summary_csv, sweep_csv, windows_csv, SUMMARY_HEADER,
};
pub use table::{comparison_table, ComparisonTable, ModelVariant};

/// Nodes whose baseline prediction is below this many km/h are left out of
/// AAIR.
pub const AAIR_FLOOR: f64 = 0.1;

/// Mean absolute influence.
pub fn aai(phi: &[f64]) -> f64 {
    if phi.is_empty() {
        return 0.0;
    }
    phi.iter().map(|p| p.abs()).sum::<f64>() / phi.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aair {
    pub value: f64,
    pub included: usize,
    pub excluded: usize,
    /// `φ_i / |y_i|`, `None` where node i was excluded.
    pub per_node: Vec<Option<f64>>,
}

/// Mean of `φ_i / |y_i|` over nodes whose mean absolute baseline prediction
/// is at least [`AAIR_FLOOR`]. With a horizon longer than one step, `|y_i|`
/// is summed over the horizon to match `φ_i`.
pub fn aair(phi: &[f64], baseline: &Array2<f64>) -> Result<Aair> {
    if phi.len() != baseline.nrows() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} influences", baseline.nrows()),
            actual: phi.len().to_string(),
        });
    }
    let horizon = baseline.ncols().max(1) as f64;
    let per_node: Vec<Option<f64>> = baseline
        .rows()
        .into_iter()
        .zip(phi)
        .map(|(y, &p)| {
            let level: f64 = y.iter().map(|v| v.abs()).sum();
            (level / horizon >= AAIR_FLOOR).then(|| p / level)
        })
        .collect();
    let included: Vec<f64> = per_node.iter().flatten().copied().collect();
    if included.is_empty() {
        return Err(Error::AllNodesExcluded { floor: AAIR_FLOOR });
    }
    Ok(Aair {
        value: included.iter().sum::<f64>() / included.len() as f64,
        included: included.len(),
        excluded: phi.len() - included.len(),
        per_node,
    })
}

/// One input window taken from the test split.
#[derive(Debug, Clone, PartialEq)]
pub struct TestWindow {
    pub start: usize,
    pub x: Array2<f64>,
}

/// `count` test windows sampled without replacement, in time order. Asking
/// for at least as many windows as exist returns them all.
pub fn select_windows(dataset: &WindowedDataset, count: usize, seed: u64) -> Vec<TestWindow> {
    let starts = dataset.test_starts();
    let chosen: Vec<usize> = if count >= starts.len() {
        starts
    } else {
        let mut picks: Vec<usize> = index::sample(&mut rng_for(seed, "windows"), starts.len(), count)
            .into_iter()
            .map(|k| starts[k])
            .collect();
        picks.sort_unstable();
        picks
    };
    chosen
        .into_iter()
        .map(|start| TestWindow {
            start,
            x: dataset.sample(start).0,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    pub start: usize,
    pub seed: u64,
    pub set: AttackSet,
    pub selection_scores: Vec<f64>,
    pub phi: Vec<f64>,
    pub aai: f64,
    pub aair: Aair,
    /// `Φ` for this window.
    pub total: f64,
    pub evaluations: usize,
    pub perturbation: Perturbation,
}

/// Selects nodes for one window with `strategy` and attacks them.
pub fn attack_window<M: BlackBoxModel + ?Sized>(
    model: &M,
    graph: &Graph,
    window: &TestWindow,
    strategy: SelectionStrategy,
    budget: &BudgetSpec,
    cfg: &AttackConfig,
    seed: u64,
) -> Result<WindowResult> {
    let selection = select_nodes(strategy, graph, model, &window.x, budget, cfg, seed)?;
    let outcome = run_attack(model, &window.x, &selection.set, &cfg.with_seed(derive_seed(seed, "attack")))?;
    let phi = outcome.influence.phi;
    Ok(WindowResult {
        start: window.start,
        seed,
        set: selection.set,
        selection_scores: selection.scores,
        aai: aai(&phi),
        aair: aair(&phi, &outcome.influence.baseline)?,
        total: outcome.influence.total,
        evaluations: outcome.evaluations,
        perturbation: outcome.perturbation,
        phi,
    })
}

/// Dataset-level result of one strategy at one budget.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackReport {
    pub strategy: SelectionStrategy,
    /// Budget in the units it was requested in.
    pub budget: f64,
    /// Budget actually applied to the degree costs.
    pub applied_budget: f64,
    pub seed: u64,
    pub aai: f64,
    pub aai_std: f64,
    pub aair: f64,
    pub aair_std: f64,
    /// Mean over windows of per-node `φ_i`.
    pub phi: Vec<f64>,
    pub windows: Vec<WindowResult>,
}

impl AttackReport {
    pub fn from_windows(
        strategy: SelectionStrategy,
        budget: f64,
        applied_budget: f64,
        seed: u64,
        windows: Vec<WindowResult>,
    ) -> Result<Self> {
        let first = windows.first().ok_or_else(|| Error::InvalidArgument("no windows to report".into()))?;
        let n = first.phi.len();
        let mut phi = vec![0.0; n];
        for w in &windows {
            for (acc, p) in phi.iter_mut().zip(&w.phi) {
                *acc += p;
            }
        }
        let k = windows.len() as f64;
        phi.iter_mut().for_each(|p| *p /= k);
        let aais: Vec<f64> = windows.iter().map(|w| w.aai).collect();
        let aairs: Vec<f64> = windows.iter().map(|w| w.aair.value).collect();
        let (aai, aai_std) = mean_std(&aais);
        let (aair, aair_std) = mean_std(&aairs);
        Ok(Self {
            strategy,
            budget,
            applied_budget,
            seed,
            aai,
            aai_std,
            aair,
            aair_std,
            phi,
            windows,
        })
    }

    pub fn mean_selected(&self) -> f64 {
        self.windows.iter().map(|w| w.set.len() as f64).sum::<f64>() / self.windows.len() as f64
    }

    pub fn aair_excluded(&self) -> usize {
        self.windows.iter().map(|w| w.aair.excluded).sum()
    }

    /// Fraction of windows in which each node was attacked.
    pub fn selection_frequency(&self) -> Vec<f64> {
        let n = self.phi.len();
        let mut freq = vec![0.0; n];
        for w in &self.windows {
            for &i in w.set.nodes() {
                freq[i] += 1.0;
            }
        }
        let k = self.windows.len() as f64;
        freq.iter_mut().for_each(|f| *f /= k);
        freq
    }

    /// Per-node AAIR averaged over the windows where the node was included.
    pub fn per_node_aair(&self) -> Vec<Option<f64>> {
        let n = self.phi.len();
        (0..n)
            .map(|i| {
                let vals: Vec<f64> = self.windows.iter().filter_map(|w| w.aair.per_node[i]).collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect()
    }
}

/// Mean and population std; `(0, 0)` for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / k;
    (mean, var.sqrt())
}

pub(crate) fn window_seed(seed: u64, index: usize) -> u64 {
    derive_indexed(seed, "window", index as u64)
}

/// Attacks every window with `strategy` under `budget` and averages.
pub fn evaluate_strategy<M: BlackBoxModel + ?Sized>(
    model: &M,
    graph: &Graph,
    windows: &[TestWindow],
    strategy: SelectionStrategy,
    budget: &BudgetSpec,
    cfg: &AttackConfig,
    seed: u64,
) -> Result<AttackReport> {
    let results = windows
        .par_iter()
        .enumerate()
        .map(|(k, w)| attack_window(model, graph, w, strategy, budget, cfg, window_seed(seed, k)))
        .collect::<Result<Vec<_>>>()?;
    AttackReport::from_windows(strategy, budget.total, budget.total, seed, results)
}

/// One report per budget; every row reuses the same windows and seeds.
///
/// `budgets` are in requested units and are multiplied by `scale` before
/// being applied to `base.costs`.
#[allow(clippy::too_many_arguments)]
pub fn budget_sweep<M: BlackBoxModel + ?Sized>(
    model: &M,
    graph: &Graph,
    windows: &[TestWindow],
    strategy: SelectionStrategy,
    base: &BudgetSpec,
    budgets: &[f64],
    scale: f64,
    cfg: &AttackConfig,
    seed: u64,
) -> Result<Vec<AttackReport>> {
    if budgets.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("budgets must be sorted ascending".into()));
    }
    let specs = budgets
        .iter()
        .map(|&b| base.with_total(b * scale))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..budgets.len())
        .flat_map(|b| (0..windows.len()).map(move |k| (b, k)))
        .collect();
    let mut results = jobs
        .par_iter()
        .map(|&(b, k)| attack_window(model, graph, &windows[k], strategy, &specs[b], cfg, window_seed(seed, k)))
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    budgets
        .iter()
        .zip(&specs)
        .map(|(&b, spec)| {
            let rows: Vec<WindowResult> = results.by_ref().take(windows.len()).collect();
            AttackReport::from_windows(strategy, b, spec.total, seed, rows)
        })
        .collect()
}

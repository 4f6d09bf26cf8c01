use std::fmt::Write as _;

use rayon::prelude::*;

use super::{attack_window, window_seed, AttackReport, TestWindow, WindowResult};
use crate::attack::AttackConfig;
use crate::error::Result;
use crate::graph::Graph;
use crate::predictor::BlackBoxModel;
use crate::selection::{BudgetSpec, SelectionStrategy};

/// A named model column in a comparison table.
#[derive(Clone, Copy)]
pub struct ModelVariant<'a> {
    pub name: &'a str,
    pub model: &'a dyn BlackBoxModel,
}

/// AAI/AAIR for every strategy (rows) against every model variant (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub variants: Vec<String>,
    pub strategies: Vec<SelectionStrategy>,
    /// `reports[s][v]`.
    pub reports: Vec<Vec<AttackReport>>,
}

impl ComparisonTable {
    pub fn report(&self, strategy: SelectionStrategy, variant: &str) -> Option<&AttackReport> {
        let s = self.strategies.iter().position(|&x| x == strategy)?;
        let v = self.variants.iter().position(|x| x == variant)?;
        Some(&self.reports[s][v])
    }

    /// One row per strategy with `aai_<variant>` and `aair_<variant>` columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy");
        for v in &self.variants {
            let _ = write!(out, ",aai_{v},aair_{v}");
        }
        out.push('\n');
        for (s, row) in self.strategies.iter().zip(&self.reports) {
            out.push_str(s.name());
            for r in row {
                let _ = write!(out, ",{},{}", r.aai, r.aair);
            }
            out.push('\n');
        }
        out
    }

    /// Fixed-width text rendering: AAI in km/h with AAIR as a percentage.
    pub fn to_text(&self) -> String {
        let width = 20;
        let mut out = format!("{:<16}", "strategy");
        for v in &self.variants {
            let _ = write!(out, "{v:>width$}");
        }
        out.push('\n');
        let _ = writeln!(out, "{}", "-".repeat(16 + width * self.variants.len()));
        for (s, row) in self.strategies.iter().zip(&self.reports) {
            let _ = write!(out, "{:<16}", s.name());
            for r in row {
                let cell = format!("{:.3} ({:.2}%)", r.aai, 100.0 * r.aair);
                let _ = write!(out, "{cell:>width$}");
            }
            out.push('\n');
        }
        out
    }
}

/// Runs every (strategy, variant) cell over the same windows and seeds.
pub fn comparison_table(
    variants: &[ModelVariant<'_>],
    strategies: &[SelectionStrategy],
    graph: &Graph,
    windows: &[TestWindow],
    budget: &BudgetSpec,
    cfg: &AttackConfig,
    seed: u64,
) -> Result<ComparisonTable> {
    let jobs: Vec<(usize, usize, usize)> = (0..strategies.len())
        .flat_map(|s| (0..variants.len()).flat_map(move |v| (0..windows.len()).map(move |k| (s, v, k))))
        .collect();
    let mut results = jobs
        .par_iter()
        .map(|&(s, v, k)| {
            attack_window(
                variants[v].model,
                graph,
                &windows[k],
                strategies[s],
                budget,
                cfg,
                window_seed(seed, k),
            )
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    let mut reports = Vec::with_capacity(strategies.len());
    for &strategy in strategies {
        let mut row = Vec::with_capacity(variants.len());
        for _ in variants {
            let cells: Vec<WindowResult> = results.by_ref().take(windows.len()).collect();
            row.push(AttackReport::from_windows(strategy, budget.total, budget.total, seed, cells)?);
        }
        reports.push(row);
    }
    Ok(ComparisonTable {
        variants: variants.iter().map(|v| v.name.to_string()).collect(),
        strategies: strategies.to_vec(),
        reports,
    })
}

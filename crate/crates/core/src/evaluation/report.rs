//! CSV renderers. Floats are written with Rust's shortest round-trip
//! formatting, so files reproduce the in-memory values exactly.

use std::fmt::Write as _;

use super::{AttackReport, HopCurve};
use crate::attack::Perturbation;
use crate::selection::{BudgetSpec, Selection};

pub const SUMMARY_HEADER: &str =
    "variant,strategy,budget,applied_budget,seed,windows,aai,aai_std,aair,aair_std,aair_excluded,mean_selected";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per `(variant, report)`.
pub fn summary_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a AttackReport)>) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for (variant, r) in rows {
        let _ = writeln!(
            out,
            "{variant},{},{},{},{},{},{},{},{},{},{},{}",
            r.strategy,
            r.budget,
            r.applied_budget,
            r.seed,
            r.windows.len(),
            r.aai,
            r.aai_std,
            r.aair,
            r.aair_std,
            r.aair_excluded(),
            r.mean_selected()
        );
    }
    out
}

/// Per-window detail of one report.
pub fn windows_csv(report: &AttackReport) -> String {
    let mut out = String::from("window_start,seed,selected,aai,aair,phi_total,evaluations,attack_set\n");
    for w in &report.windows {
        let set: Vec<String> = w.set.nodes().iter().map(|i| i.to_string()).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            w.start,
            w.seed,
            w.set.len(),
            w.aai,
            w.aair.value,
            w.total,
            w.evaluations,
            set.join(" ")
        );
    }
    out
}

/// Mean per-node influence, its AAIR and how often each node was attacked.
pub fn per_node_csv(report: &AttackReport, node_ids: &[String]) -> String {
    let freq = report.selection_frequency();
    let ratio = report.per_node_aair();
    let mut out = String::from("node,node_id,phi,abs_phi,aair,selected_fraction\n");
    for (i, p) in report.phi.iter().enumerate() {
        let id = node_ids.get(i).map(String::as_str).unwrap_or("");
        let _ = writeln!(out, "{i},{id},{p},{},{},{}", p.abs(), opt(ratio[i]), freq[i]);
    }
    out
}

pub fn hop_csv(curve: &HopCurve) -> String {
    let mut out = format!("# attacked node {}\nhop,nodes,mean_abs_phi\n", curve.attacked);
    for (k, (m, c)) in curve.mean_abs_phi.iter().zip(&curve.counts).enumerate() {
        let _ = writeln!(out, "{k},{c},{m}");
    }
    if let Some(m) = curve.unreachable_mean {
        let _ = writeln!(out, "unreachable,{},{m}", curve.unreachable_count);
    }
    out
}

pub fn sweep_csv(rows: &[AttackReport]) -> String {
    let mut out = String::from("budget,applied_budget,aai,aai_std,aair,aair_std,mean_selected\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.budget,
            r.applied_budget,
            r.aai,
            r.aai_std,
            r.aair,
            r.aair_std,
            r.mean_selected()
        );
    }
    out
}

/// Ranked selection listing: `node_id, score, cost, selected, cumulative_cost`.
/// Rows follow the order nodes were considered; cumulative cost counts only
/// selected nodes.
pub fn selection_csv(selection: &Selection, budget: &BudgetSpec, node_ids: &[String]) -> String {
    let n = selection.scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    let key = |i: usize| {
        if selection.strategy.is_knapsack() {
            selection.scores[i] / budget.costs[i]
        } else {
            selection.scores[i]
        }
    };
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
    let mut out = String::from("node,node_id,score,cost,selected,cumulative_cost\n");
    let mut cumulative = 0.0;
    for i in order {
        let selected = selection.set.contains(i);
        if selected {
            cumulative += budget.costs[i];
        }
        let id = node_ids.get(i).map(String::as_str).unwrap_or("");
        let _ = writeln!(
            out,
            "{i},{id},{},{},{},{cumulative}",
            selection.scores[i],
            budget.costs[i],
            u8::from(selected)
        );
    }
    out
}

/// `U` as an `N × S` grid with a header of step offsets.
pub fn perturbation_csv(u: &Perturbation) -> String {
    let m = u.matrix();
    let mut out = String::from("node");
    for s in 0..m.ncols() {
        let _ = write!(out, ",t{s}");
    }
    out.push('\n');
    for (i, row) in m.rows().into_iter().enumerate() {
        out.push_str(&i.to_string());
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use ndarray::arr2;

    use super::*;
    use crate::attack::AttackSet;
    use crate::selection::SelectionStrategy;

    #[test]
    fn selection_listing_tracks_cumulative_cost() {
        let sel = Selection {
            strategy: SelectionStrategy::KgPagerank,
            set: AttackSet::new([1, 2], 3).unwrap(),
            scores: vec![6.0, 5.0, 4.0],
        };
        let budget = BudgetSpec::new(4.0, vec![3.0, 2.0, 2.0]).unwrap();
        let csv = selection_csv(&sel, &budget, &["a".into(), "b".into(), "c".into()]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "1,b,5,2,1,2");
        assert_eq!(lines[2], "0,a,6,3,0,2");
        assert_eq!(lines[3], "2,c,4,2,1,4");
    }

    #[test]
    fn perturbation_grid() {
        let u = Perturbation::new(arr2(&[[0.5, -1.0], [0.0, 0.0]]), AttackSet::new([0], 2).unwrap());
        assert_eq!(perturbation_csv(&u), "node,t0,t1\n0,0.5,-1\n1,0,0\n");
    }
}

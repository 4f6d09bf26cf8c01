use ndarray::Array2;

use crate::attack::{run_attack, AttackConfig, AttackSet};
use crate::error::Result;
use crate::graph::Graph;
use crate::predictor::BlackBoxModel;

/// Mean `|φ|` by hop distance from a single attacked node.
#[derive(Debug, Clone, PartialEq)]
pub struct HopCurve {
    pub attacked: usize,
    /// Entry k is the mean over nodes exactly k hops away.
    pub mean_abs_phi: Vec<f64>,
    pub counts: Vec<usize>,
    /// Mean `|φ|` over nodes that cannot reach the attacked node.
    pub unreachable_mean: Option<f64>,
    pub unreachable_count: usize,
}

impl HopCurve {
    pub fn at(&self, hop: usize) -> f64 {
        self.mean_abs_phi.get(hop).copied().unwrap_or(0.0)
    }
}

/// Groups `|φ_i|` by the hop distance from node i to `attacked`, which is
/// the direction the GCN propagates information.
pub fn hop_curve_from_phi(graph: &Graph, attacked: usize, phi: &[f64]) -> Result<HopCurve> {
    graph.check_node(attacked)?;
    let dist = graph.bfs_distances_to(attacked);
    let max_hop = dist.iter().flatten().copied().max().unwrap_or(0);
    let mut sums = vec![0.0; max_hop + 1];
    let mut counts = vec![0usize; max_hop + 1];
    let (mut far_sum, mut far_count) = (0.0, 0usize);
    for (d, p) in dist.iter().zip(phi) {
        match d {
            Some(k) => {
                sums[*k] += p.abs();
                counts[*k] += 1;
            }
            None => {
                far_sum += p.abs();
                far_count += 1;
            }
        }
    }
    Ok(HopCurve {
        attacked,
        mean_abs_phi: sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect(),
        counts,
        unreachable_mean: (far_count > 0).then(|| far_sum / far_count as f64),
        unreachable_count: far_count,
    })
}

/// Attacks node `attacked` alone and reports how the influence decays with
/// hop distance.
pub fn hop_influence<M: BlackBoxModel + ?Sized>(
    model: &M,
    x: &Array2<f64>,
    graph: &Graph,
    attacked: usize,
    cfg: &AttackConfig,
) -> Result<HopCurve> {
    graph.check_node(attacked)?;
    let set = AttackSet::new([attacked], graph.n_nodes())?;
    let outcome = run_attack(model, x, &set, cfg)?;
    hop_curve_from_phi(graph, attacked, &outcome.influence.phi)
}

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NormalizedAdjacency};

/// Training-time drop regularization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DropMode {
    #[default]
    None,
    /// Zero whole feature rows of `X`.
    DropOut,
    /// Remove nodes: zero their features and their row/column of `Â`.
    DropNode,
    /// Remove edges before normalization.
    DropEdge,
}

impl DropMode {
    pub const ALL: [DropMode; 4] = [
        DropMode::None,
        DropMode::DropOut,
        DropMode::DropNode,
        DropMode::DropEdge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DropMode::None => "none",
            DropMode::DropOut => "drop_out",
            DropMode::DropNode => "drop_node",
            DropMode::DropEdge => "drop_edge",
        }
    }
}

impl fmt::Display for DropMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DropMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "none" | "original" => Ok(DropMode::None),
            "drop_out" | "dropout" => Ok(DropMode::DropOut),
            "drop_node" | "dropnode" => Ok(DropMode::DropNode),
            "drop_edge" | "dropedge" => Ok(DropMode::DropEdge),
            other => Err(Error::Config(format!("unknown drop mode {other:?}"))),
        }
    }
}

/// Graph-level part of a drop draw: the adjacency to train with and, for
/// DropNode, which nodes survived.
#[derive(Debug, Clone)]
pub struct GraphDrop<'a> {
    pub a_hat: Cow<'a, NormalizedAdjacency>,
    pub kept: Option<Vec<bool>>,
}

/// Draws the per-epoch graph perturbation for `mode`.
pub fn sample_graph_drop<'a, R: Rng + ?Sized>(
    mode: DropMode,
    prob: f64,
    graph: &Graph,
    a_hat: &'a NormalizedAdjacency,
    rng: &mut R,
) -> Result<GraphDrop<'a>> {
    check_prob(prob)?;
    let unchanged = GraphDrop {
        a_hat: Cow::Borrowed(a_hat),
        kept: None,
    };
    if prob == 0.0 {
        return Ok(unchanged);
    }
    match mode {
        DropMode::None | DropMode::DropOut => Ok(unchanged),
        DropMode::DropEdge => {
            let edges = graph.edges();
            if edges.is_empty() {
                return Ok(unchanged);
            }
            let kept: Vec<_> = edges.into_iter().filter(|_| !rng.gen_bool(prob)).collect();
            let thinned = graph.with_edges(&kept)?;
            Ok(GraphDrop {
                a_hat: Cow::Owned(thinned.normalized_adjacency()),
                kept: None,
            })
        }
        DropMode::DropNode => {
            let kept = survivor_mask(graph.n_nodes(), prob, rng);
            Ok(GraphDrop {
                a_hat: Cow::Owned(NormalizedAdjacency::from_graph_masked(graph, Some(&kept))),
                kept: Some(kept),
            })
        }
    }
}

/// Row-level part of a drop draw, applied to one feature window.
///
/// DropOut zeroes each row with probability `prob` and rescales survivors by
/// `1/(1-prob)` so the expected input matches inference. DropNode zeroes the
/// rows of nodes missing from `kept`.
pub fn drop_rows<R: Rng + ?Sized>(
    mode: DropMode,
    prob: f64,
    x: &mut Array2<f64>,
    kept: Option<&[bool]>,
    rng: &mut R,
) {
    match mode {
        DropMode::DropOut if prob > 0.0 => {
            let mask = survivor_mask(x.nrows(), prob, rng);
            let scale = 1.0 / (1.0 - prob);
            for (mut row, keep) in x.rows_mut().into_iter().zip(mask) {
                if keep {
                    row.mapv_inplace(|v| v * scale);
                } else {
                    row.fill(0.0);
                }
            }
        }
        DropMode::DropNode => {
            if let Some(kept) = kept {
                for (mut row, &keep) in x.rows_mut().into_iter().zip(kept) {
                    if !keep {
                        row.fill(0.0);
                    }
                }
            }
        }
        _ => {}
    }
}

/// One full drop draw for a single window.
pub fn apply_drop<'a, R: Rng + ?Sized>(
    mode: DropMode,
    prob: f64,
    x: &Array2<f64>,
    graph: &Graph,
    a_hat: &'a NormalizedAdjacency,
    rng: &mut R,
) -> Result<(Array2<f64>, GraphDrop<'a>)> {
    let drop = sample_graph_drop(mode, prob, graph, a_hat, rng)?;
    let mut x = x.clone();
    drop_rows(mode, prob, &mut x, drop.kept.as_deref(), rng);
    Ok((x, drop))
}

fn check_prob(prob: f64) -> Result<()> {
    if !(0.0..1.0).contains(&prob) {
        return Err(Error::InvalidArgument(format!(
            "drop probability must lie in [0, 1), got {prob}"
        )));
    }
    Ok(())
}

/// Independent keep/drop per item; redrawn while nothing survives.
fn survivor_mask<R: Rng + ?Sized>(n: usize, prob: f64, rng: &mut R) -> Vec<bool> {
    loop {
        let mask: Vec<bool> = (0..n).map(|_| !rng.gen_bool(prob)).collect();
        if n == 0 || mask.iter().any(|&k| k) {
            return mask;
        }
    }
}

//! Synthetic road-network speed benchmark.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::seed::rng_for;
use super::SpeedDataset;
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GraphModel {
    #[default]
    RandomGeometric,
    Grid,
    Ring,
}

impl GraphModel {
    pub fn name(self) -> &'static str {
        match self {
            GraphModel::RandomGeometric => "random-geometric",
            GraphModel::Grid => "grid",
            GraphModel::Ring => "ring",
        }
    }
}

impl fmt::Display for GraphModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GraphModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "random-geometric" | "rgg" => Ok(GraphModel::RandomGeometric),
            "grid" => Ok(GraphModel::Grid),
            "ring" => Ok(GraphModel::Ring),
            _ => Err(Error::Config(format!("unknown graph model {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_nodes: usize,
    pub graph_model: GraphModel,
    /// Network-wide mean speed in km/h.
    pub mean_speed: f64,
    /// Half peak-to-trough swing of the daily cycle, km/h.
    pub amplitude: f64,
    /// Stationary std of the smoothed noise, km/h.
    pub noise_std: f64,
    /// Per-node base speeds span `mean ± speed_spread`.
    pub speed_spread: f64,
    /// Passes of `Â` smoothing applied to the base-speed field, so nearby
    /// nodes share a speed regime.
    pub base_smoothing: usize,
    /// Expected mean degree of the random-geometric graph.
    pub target_degree: f64,
    /// AR(1) coefficient of the noise process.
    pub noise_persistence: f64,
    pub days: usize,
    pub interval_minutes: u32,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_nodes: 60,
            graph_model: GraphModel::RandomGeometric,
            mean_speed: 55.0,
            amplitude: 10.0,
            noise_std: 2.0,
            speed_spread: 15.0,
            base_smoothing: 3,
            target_degree: 6.0,
            noise_persistence: 0.8,
            days: 7,
            interval_minutes: 5,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_nodes == 0 {
            return Err(Error::EmptyGraph);
        }
        if self.days == 0 || self.interval_minutes == 0 {
            return bad("days and interval_minutes must be positive");
        }
        if !(self.mean_speed.is_finite() && self.mean_speed > 0.0) {
            return bad("mean_speed must be positive");
        }
        for (name, v) in [
            ("amplitude", self.amplitude),
            ("noise_std", self.noise_std),
            ("speed_spread", self.speed_spread),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a finite non-negative number")));
            }
        }
        if self.target_degree.is_nan() || self.target_degree <= 0.0 {
            return bad("target_degree must be positive");
        }
        if !(0.0..1.0).contains(&self.noise_persistence) {
            return bad("noise_persistence must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn total_steps(&self) -> usize {
        self.days * 24 * 60 / self.interval_minutes as usize
    }

    fn steps_per_day(&self) -> usize {
        24 * 60 / self.interval_minutes as usize
    }
}

/// Radius at which `n` uniform points in the unit square have expected mean
/// degree `target_degree`, boundary loss included.
///
/// Two uniform points lie within `r ≤ 1` of each other with probability
/// `πr² − 8r³/3 + r⁴/2`; the radius is found by bisection on that curve.
pub fn geometric_radius(n: usize, target_degree: f64) -> f64 {
    let pairs = (n.max(2) - 1) as f64;
    let p = (target_degree / pairs).min(1.0);
    let prob = |r: f64| PI * r * r - 8.0 * r.powi(3) / 3.0 + r.powi(4) / 2.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if prob(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Builds the synthetic graph. Every model carries node positions.
pub fn synthetic_graph(spec: &SyntheticSpec) -> Result<Graph> {
    let n = spec.n_nodes;
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let (edges, positions) = match spec.graph_model {
        GraphModel::RandomGeometric => {
            let mut rng = rng_for(spec.seed, "gen/graph");
            let pos: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            let r2 = geometric_radius(n, spec.target_degree).powi(2);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    let (dx, dy) = (pos[i][0] - pos[j][0], pos[i][1] - pos[j][1]);
                    if dx * dx + dy * dy <= r2 {
                        edges.push((i, j));
                    }
                }
            }
            (edges, pos)
        }
        GraphModel::Grid => {
            let side = (n as f64).sqrt().ceil() as usize;
            let mut edges = Vec::new();
            for i in 0..n {
                if i % side + 1 < side && i + 1 < n {
                    edges.push((i, i + 1));
                }
                if i + side < n {
                    edges.push((i, i + side));
                }
            }
            let pos = (0..n).map(|i| [(i % side) as f64, (i / side) as f64]).collect();
            (edges, pos)
        }
        GraphModel::Ring => {
            let edges = if n < 2 {
                vec![]
            } else if n == 2 {
                vec![(0, 1)]
            } else {
                (0..n).map(|i| (i, (i + 1) % n)).collect()
            };
            let pos = (0..n)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / n as f64;
                    [t.cos(), t.sin()]
                })
                .collect();
            (edges, pos)
        }
    };
    Graph::build(&edges, n, true)?.with_positions(positions)
}

/// Generates the graph and a `steps × N` speed matrix.
///
/// Speed at node i and step t is `base_i + amplitude·sin(2πt/day) + e_it`,
/// clamped below at 1 km/h. The noise `e` is an AR(1) process whose
/// innovations are smoothed once through `Â`, then rescaled so its
/// stationary std equals `noise_std`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Graph, SpeedDataset)> {
    spec.validate()?;
    let graph = synthetic_graph(spec)?;
    let n = spec.n_nodes;
    let steps = spec.total_steps();
    let day = spec.steps_per_day() as f64;

    let a_hat = graph.normalized_adjacency();
    let base = base_speeds(spec, &graph);
    // std of one smoothed innovation per node, so the rescale is exact
    let smooth_std: Vec<f64> = (0..n)
        .map(|i| a_hat.row(i).iter().map(|&(_, w)| w * w).sum::<f64>().sqrt())
        .collect();
    let rho = spec.noise_persistence;
    let innovation_scale = (1.0 - rho * rho).sqrt();

    let mut noise_rng = rng_for(spec.seed, "gen/noise");
    let mut e = Array1::<f64>::zeros(n);
    let mut speeds = Array2::<f64>::zeros((steps, n));
    for t in 0..steps {
        let xi = Array2::from_shape_fn((n, 1), |_| noise_rng.sample::<f64, _>(StandardNormal));
        let smoothed = a_hat.propagate(xi.view());
        for i in 0..n {
            let z = smoothed[[i, 0]] / smooth_std[i];
            e[i] = if t == 0 { z } else { rho * e[i] + innovation_scale * z };
        }
        let cycle = spec.amplitude * (2.0 * PI * t as f64 / day).sin();
        for i in 0..n {
            speeds[[t, i]] = (base[i] + cycle + spec.noise_std * e[i]).max(1.0);
        }
    }
    let dataset = SpeedDataset::new(speeds, spec.interval_minutes, default_node_ids(n))?;
    Ok((graph, dataset))
}

/// Uniform draws smoothed `base_smoothing` times through `Â`, centred and
/// stretched so the extremes sit at `mean ± speed_spread`.
fn base_speeds(spec: &SyntheticSpec, graph: &Graph) -> Vec<f64> {
    let n = spec.n_nodes;
    let mut rng = rng_for(spec.seed, "gen/base");
    let mut field = Array2::from_shape_fn((n, 1), |_| 2.0 * rng.gen::<f64>() - 1.0);
    let a_hat = graph.normalized_adjacency();
    for _ in 0..spec.base_smoothing {
        field = a_hat.propagate(field.view());
    }
    let mean = field.sum() / n as f64;
    let peak = field.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    field
        .iter()
        .map(|v| {
            let z = if peak > 0.0 { (v - mean) / peak } else { 0.0 };
            spec.mean_speed + spec.speed_spread * z
        })
        .collect()
}

pub fn default_node_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("n{i}")).collect()
}

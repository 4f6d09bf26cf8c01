//! Black-box perturbation of a fixed attack set.
//!
//! Given an attack set `P`, [`run_attack`] searches for a perturbation `U`
//! (rows outside `P` exactly zero, rows inside boxed by
//! `-ε⁻ x_i ≤ u_i ≤ ε⁺ x_i`) that maximizes the weighted influence
//! `Φ(U) = Σ_i w_i φ_i(U)`. The model is only ever queried through
//! [`BlackBoxModel::predict`].

mod spsa;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::predictor::BlackBoxModel;

pub use spsa::{
    clip_in_place, clip_perturbation, gain_sequences, run_attack, run_attack_observed,
    sample_masked_rademacher, satisfies_constraints, spsa_gradient, AttackOutcome,
};

/// How a node's prediction shift is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObjectiveMode {
    /// `φ_i = Σ_t (y_it - y'_it)`: positive when the predicted speed drops.
    #[default]
    SignedSpeedDrop,
    /// `φ_i = ||y'_i - y_i||²`.
    Mse,
}

impl fmt::Display for ObjectiveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveMode::SignedSpeedDrop => "signed_speed_drop",
            ObjectiveMode::Mse => "mse",
        })
    }
}

impl FromStr for ObjectiveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "signed_speed_drop" | "signed" => Ok(ObjectiveMode::SignedSpeedDrop),
            "mse" => Ok(ObjectiveMode::Mse),
            other => Err(Error::Config(format!("unknown objective mode {other:?}"))),
        }
    }
}

/// Stability offset `η(n)` in the step-size sequence `a_n = a / (η(n) + n)^α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaRule {
    /// `η(n) = k·n`.
    Proportional(f64),
    /// `η(n) = k`.
    Constant(f64),
}

impl EtaRule {
    pub fn eta(self, n: usize) -> f64 {
        match self {
            EtaRule::Proportional(k) => k * n as f64,
            EtaRule::Constant(k) => k,
        }
    }
}

impl Default for EtaRule {
    fn default() -> Self {
        EtaRule::Proportional(0.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    pub eps_minus: f64,
    pub eps_plus: f64,
    pub a: f64,
    pub c: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub eta: EtaRule,
    pub max_iter: usize,
    /// Iterations of the `P = V` run that estimates per-node utilities.
    pub probe_iter: usize,
    /// Importance weights `w_i`; `None` means all ones.
    pub node_weights: Option<Vec<f64>>,
    pub objective: ObjectiveMode,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            eps_minus: 1.0,
            eps_plus: 0.5,
            a: 0.328,
            c: 0.1,
            alpha: 0.202,
            gamma: 0.101,
            eta: EtaRule::default(),
            max_iter: 30_000,
            probe_iter: 100,
            node_weights: None,
            objective: ObjectiveMode::SignedSpeedDrop,
            seed: 0,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.eps_minus > 0.0 && self.eps_plus > 0.0) {
            return bad("eps_minus and eps_plus must be positive".into());
        }
        if !(self.a > 0.0 && self.c > 0.0) {
            return bad("a and c must be positive".into());
        }
        for (name, v) in [("alpha", self.alpha), ("gamma", self.gamma)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if self.max_iter == 0 || self.probe_iter == 0 {
            return bad("max_iter and probe_iter must be at least 1".into());
        }
        if let Some(w) = &self.node_weights {
            if w.iter().any(|v| !v.is_finite()) {
                return bad("node weights must be finite".into());
            }
        }
        Ok(())
    }

    /// The same configuration in utility-probe mode.
    pub fn probe(&self) -> Self {
        Self {
            max_iter: self.probe_iter,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub(crate) fn weight(&self, i: usize) -> f64 {
        self.node_weights.as_ref().map_or(1.0, |w| w[i])
    }
}

/// A sorted, duplicate-free set of node indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct AttackSet(Vec<usize>);

impl AttackSet {
    pub fn new<I: IntoIterator<Item = usize>>(nodes: I, n_nodes: usize) -> Result<Self> {
        let set: BTreeSet<usize> = nodes.into_iter().collect();
        if let Some(&index) = set.iter().find(|&&i| i >= n_nodes) {
            return Err(Error::NodeOutOfRange { index, n_nodes });
        }
        Ok(Self(set.into_iter().collect()))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn all(n_nodes: usize) -> Self {
        Self((0..n_nodes).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    pub fn mask(&self, n_nodes: usize) -> Vec<bool> {
        let mut m = vec![false; n_nodes];
        for &i in &self.0 {
            m[i] = true;
        }
        m
    }
}

impl fmt::Display for AttackSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Perturbation matrix `U` (`N × S`) together with its support.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    matrix: Array2<f64>,
    support: AttackSet,
}

impl Perturbation {
    pub fn zeros(n_nodes: usize, window: usize, support: AttackSet) -> Self {
        Self {
            matrix: Array2::zeros((n_nodes, window)),
            support,
        }
    }

    /// Wraps a matrix, zeroing every row outside `support`.
    pub fn new(mut matrix: Array2<f64>, support: AttackSet) -> Self {
        let mask = support.mask(matrix.nrows());
        for (mut row, keep) in matrix.rows_mut().into_iter().zip(mask) {
            if !keep {
                row.fill(0.0);
            }
        }
        Self { matrix, support }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn support(&self) -> &AttackSet {
        &self.support
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.matrix
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceResult {
    pub phi: Vec<f64>,
    /// `Φ = Σ_i w_i φ_i`.
    pub total: f64,
    pub baseline: Array2<f64>,
    pub perturbed: Array2<f64>,
}

/// Per-node influence of moving the prediction from `baseline` to `perturbed`.
pub fn phi_from_predictions(baseline: &Array2<f64>, perturbed: &Array2<f64>, mode: ObjectiveMode) -> Vec<f64> {
    baseline
        .rows()
        .into_iter()
        .zip(perturbed.rows())
        .map(|(y, y2)| match mode {
            ObjectiveMode::SignedSpeedDrop => y.iter().zip(y2.iter()).map(|(a, b)| a - b).sum(),
            ObjectiveMode::Mse => y.iter().zip(y2.iter()).map(|(a, b)| (b - a) * (b - a)).sum(),
        })
        .collect()
}

pub(crate) fn weighted_total(phi: &[f64], cfg: &AttackConfig) -> f64 {
    phi.iter().enumerate().map(|(i, p)| cfg.weight(i) * p).sum()
}

/// Evaluates `φ` and `Φ` for perturbation `u` on window `x`.
pub fn influence<M: BlackBoxModel + ?Sized>(
    model: &M,
    x: &Array2<f64>,
    u: &Perturbation,
    cfg: &AttackConfig,
) -> Result<InfluenceResult> {
    if u.matrix().dim() != x.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", x.dim()),
            actual: format!("{:?}", u.matrix().dim()),
        });
    }
    let baseline = model.predict(x)?;
    let perturbed = model.predict(&(x + u.matrix()))?;
    Ok(influence_from(baseline, perturbed, cfg))
}

pub(crate) fn influence_from(baseline: Array2<f64>, perturbed: Array2<f64>, cfg: &AttackConfig) -> InfluenceResult {
    let phi = phi_from_predictions(&baseline, &perturbed, cfg.objective);
    let total = weighted_total(&phi, cfg);
    InfluenceResult {
        phi,
        total,
        baseline,
        perturbed,
    }
}

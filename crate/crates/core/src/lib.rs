//! Black-box diffusion attacks on graph-convolutional traffic predictors.
//!
//! The crate trains a small L-layer GCN speed forecaster over a road graph and
//! then attacks it as a black box: SPSA estimates the ascent direction of a
//! network-wide influence objective from paired model queries, and a
//! knapsack-greedy selector decides which nodes to perturb under a budget.
//!
//! Module map:
//!
//! - [`graph`]: adjacency, normalized adjacency, hop neighborhoods, centrality
//!   scores and K-Medoids used by the baseline selectors.
//! - [`predictor`]: the GCN, its training loop, drop regularization, metrics
//!   and checkpoints, plus the [`BlackBoxModel`] trait attacks consume.
//! - [`attack`]: influence evaluation and the SPSA perturbation engine.
//! - [`selection`]: attack-node selection strategies and knapsack greedy.
//! - [`evaluation`]: AAI/AAIR, hop curves, budget sweeps and comparison tables.
//! - [`io`]: CSV ingestion, the synthetic benchmark, config files and seeding.
//! - [`cli`]: the `diffattack` command-line surface.

pub mod attack;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod io;
pub mod predictor;
pub mod selection;

pub use crate::attack::{AttackConfig, AttackSet, InfluenceResult, ObjectiveMode, Perturbation};
pub use crate::error::{Error, Result};
pub use crate::graph::{Graph, NormalizedAdjacency};
pub use crate::predictor::{BlackBoxModel, GcnPredictor, TrainedModel, TrainingConfig};
pub use crate::selection::{BudgetSpec, SelectionStrategy};

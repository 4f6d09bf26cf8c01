//! GCN traffic predictor and the black-box interface attacks consume.

mod checkpoint;
mod dataset;
pub mod drop;
mod gcn;
mod metrics;
mod train;

use ndarray::{Array2, ArrayBase, Axis, Data, Ix2};

use crate::error::{Error, Result};
use crate::graph::{Graph, NormalizedAdjacency};

pub use checkpoint::Checkpoint;
pub use dataset::WindowedDataset;
pub use drop::{apply_drop, DropMode};
pub use gcn::GcnPredictor;
pub use metrics::{accuracy, rmse};
pub use train::{train, TrainHistory, TrainOutcome, TrainingConfig};

/// A traffic predictor seen only through its input/output behaviour:
/// a feature window `N × S` in, a prediction `N × T` out.
///
/// Implementations must be deterministic and safe to call from several
/// threads at once.
pub trait BlackBoxModel: Sync {
    fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>>;
}

impl<M: BlackBoxModel + ?Sized> BlackBoxModel for &M {
    fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        (**self).predict(x)
    }
}

impl<M: BlackBoxModel + ?Sized + Send> BlackBoxModel for Box<M> {
    fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        (**self).predict(x)
    }
}

impl<M: BlackBoxModel + ?Sized + Send> BlackBoxModel for std::sync::Arc<M> {
    fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        (**self).predict(x)
    }
}

/// Adapts a plain function into a [`BlackBoxModel`].
pub struct FnModel<F>(pub F);

impl<F> BlackBoxModel for FnModel<F>
where
    F: Fn(&Array2<f64>) -> Array2<f64> + Sync,
{
    fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        Ok((self.0)(x))
    }
}

/// Global min-max scaling of speeds to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMaxScaler {
    pub min: f64,
    pub max: f64,
}

impl MinMaxScaler {
    /// Fits on every value in `data`. A constant series scales by its value
    /// alone (`min = 0`) so the range never collapses.
    pub fn fit<S: Data<Elem = f64>>(data: ArrayBase<S, Ix2>) -> Self {
        let (mut min, mut max) = data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if !min.is_finite() || !max.is_finite() {
            return Self { min: 0.0, max: 1.0 };
        }
        if max - min < 1e-9 {
            min = 0.0;
            if max.abs() < 1e-9 {
                max = 1.0;
            }
        }
        Self { min, max }
    }

    fn range(&self) -> f64 {
        self.max - self.min
    }

    pub fn scale<S: Data<Elem = f64>>(&self, x: &ArrayBase<S, Ix2>) -> Array2<f64> {
        let r = self.range();
        x.mapv(|v| (v - self.min) / r)
    }

    pub fn unscale<S: Data<Elem = f64>>(&self, x: &ArrayBase<S, Ix2>) -> Array2<f64> {
        let r = self.range();
        x.mapv(|v| v * r + self.min)
    }
}

/// A trained GCN bound to its graph and scaler, predicting raw km/h.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    net: GcnPredictor,
    a_hat: NormalizedAdjacency,
    scaler: MinMaxScaler,
    graph_hash: String,
    drop_mode: DropMode,
}

impl TrainedModel {
    pub fn new(net: GcnPredictor, graph: &Graph, scaler: MinMaxScaler, drop_mode: DropMode) -> Result<Self> {
        Ok(Self {
            net,
            a_hat: graph.normalized_adjacency(),
            scaler,
            graph_hash: graph.hash(),
            drop_mode,
        })
    }

    /// Rebuilds a model from a checkpoint, refusing a graph other than the
    /// one it was trained on.
    pub fn bind(checkpoint: Checkpoint, graph: &Graph) -> Result<Self> {
        let actual = graph.hash();
        if checkpoint.graph_hash != actual {
            return Err(Error::GraphMismatch {
                expected: checkpoint.graph_hash,
                actual,
            });
        }
        Self::new(checkpoint.net, graph, checkpoint.scaler, checkpoint.drop_mode)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            net: self.net.clone(),
            scaler: self.scaler,
            graph_hash: self.graph_hash.clone(),
            drop_mode: self.drop_mode,
        }
    }

    pub fn net(&self) -> &GcnPredictor {
        &self.net
    }

    pub fn scaler(&self) -> MinMaxScaler {
        self.scaler
    }

    pub fn graph_hash(&self) -> &str {
        &self.graph_hash
    }

    pub fn drop_mode(&self) -> DropMode {
        self.drop_mode
    }

    pub fn n_layers(&self) -> usize {
        self.net.n_layers()
    }
}

impl BlackBoxModel for TrainedModel {
    fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let scaled = self.scaler.scale(x);
        let y = self.net.forward(&self.a_hat, scaled.view())?;
        Ok(self.scaler.unscale(&y))
    }
}

/// Accuracy and RMSE on raw speeds over every test window of `dataset`.
pub fn evaluate_on_test<M: BlackBoxModel + ?Sized>(model: &M, dataset: &WindowedDataset) -> Result<(f64, f64)> {
    let starts = dataset.test_starts();
    let mut truth = Vec::with_capacity(starts.len());
    let mut preds = Vec::with_capacity(starts.len());
    for start in starts {
        let (x, y) = dataset.sample(start);
        preds.push(model.predict(&x)?);
        truth.push(y);
    }
    let stack = |parts: &[Array2<f64>]| -> Result<Array2<f64>> {
        let views: Vec<_> = parts.iter().map(|a| a.view()).collect();
        ndarray::concatenate(Axis(0), &views).map_err(|e| Error::InvalidArgument(e.to_string()))
    };
    let truth = stack(&truth)?;
    let preds = stack(&preds)?;
    Ok((accuracy(&truth, &preds)?, rmse(&truth, &preds)?))
}

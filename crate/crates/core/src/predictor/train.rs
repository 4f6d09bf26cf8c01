use std::time::Instant;

use ndarray::{s, Array2, ArrayD, Axis};
use rand::seq::SliceRandom;

use super::drop::{drop_rows, sample_graph_drop, DropMode};
use super::{evaluate_on_test, GcnPredictor, MinMaxScaler, TrainedModel};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::io::seed::rng_for;
use crate::predictor::WindowedDataset;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub drop_mode: DropMode,
    pub drop_prob: f64,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 32,
            epochs: 300,
            drop_mode: DropMode::None,
            drop_prob: 0.3,
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.drop_prob > 0.0 && self.drop_prob < 1.0) {
            return bad(format!("drop_prob must lie in (0, 1), got {}", self.drop_prob));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    /// Mean scaled-space MSE per epoch.
    pub epoch_loss: Vec<f64>,
    /// Accuracy on raw speeds over all test windows.
    pub test_accuracy: f64,
    pub test_rmse: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub history: TrainHistory,
}

struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    lr: f64,
    step: i32,
    m: Vec<ArrayD<f64>>,
    v: Vec<ArrayD<f64>>,
}

impl Adam {
    fn new(model: &mut GcnPredictor, lr: f64) -> Self {
        let zeros: Vec<ArrayD<f64>> = model
            .params_mut()
            .map(|p| ArrayD::zeros(p.raw_dim()))
            .collect();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            lr,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    fn update(&mut self, model: &mut GcnPredictor, grads: &super::gcn::Gradients) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.eps, self.lr);
        for (((mut p, g), m), v) in model
            .params_mut()
            .zip(grads.tensors())
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            ndarray::Zip::from(&mut p)
                .and(&g)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
                });
        }
    }
}

/// Fits `model` with Adam on scaled-space MSE over the training windows.
///
/// Drop regularization redraws the graph perturbation once per epoch and the
/// row mask once per window. Under DropNode the dropped nodes are left out of
/// the loss.
pub fn train(
    mut model: GcnPredictor,
    dataset: &WindowedDataset,
    graph: &Graph,
    config: &TrainingConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let n = graph.n_nodes();
    if dataset.n_nodes() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} nodes"),
            actual: format!("{} nodes in dataset", dataset.n_nodes()),
        });
    }
    if model.input_width() != dataset.window() || model.horizon() != dataset.horizon() {
        return Err(Error::ShapeMismatch {
            expected: format!("window {} horizon {}", dataset.window(), dataset.horizon()),
            actual: format!("model {}x{}", model.input_width(), model.horizon()),
        });
    }
    let started = Instant::now();
    let scaler = MinMaxScaler::fit(dataset.train_rows());
    let a_hat = graph.normalized_adjacency();
    let mut shuffle_rng = rng_for(config.seed, "train/shuffle");
    let mut drop_rng = rng_for(config.seed, "train/drop");
    let mut adam = Adam::new(&mut model, config.learning_rate);
    let mut order = dataset.train_starts();
    let (s_in, t_out) = (dataset.window(), dataset.horizon());
    let mut epoch_loss = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let drop = sample_graph_drop(config.drop_mode, config.drop_prob, graph, &a_hat, &mut drop_rng)?;
        let kept = drop.kept.as_deref();
        let active = kept.map_or(n, |k| k.iter().filter(|&&v| v).count());
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;

        for batch in order.chunks(config.batch_size) {
            let blocks = batch.len();
            let mut xs = Array2::<f64>::zeros((blocks * n, s_in));
            let mut ys = Array2::<f64>::zeros((blocks * n, t_out));
            for (b, &start) in batch.iter().enumerate() {
                let (x, y) = dataset.sample(start);
                let mut x = scaler.scale(&x);
                drop_rows(config.drop_mode, config.drop_prob, &mut x, kept, &mut drop_rng);
                xs.slice_mut(s![b * n..(b + 1) * n, ..]).assign(&x);
                ys.slice_mut(s![b * n..(b + 1) * n, ..]).assign(&scaler.scale(&y));
            }
            let cache = model.forward_cached(&drop.a_hat, xs.view(), blocks);
            let mut diff = &cache.output - &ys;
            if let Some(kept) = kept {
                for (r, mut row) in diff.axis_iter_mut(Axis(0)).enumerate() {
                    if !kept[r % n] {
                        row.fill(0.0);
                    }
                }
            }
            let count = (blocks * active * t_out) as f64;
            let sse: f64 = diff.iter().map(|d| d * d).sum();
            if !sse.is_finite() {
                return Err(Error::NonFinite {
                    iteration: epoch,
                    what: "training loss".into(),
                });
            }
            loss_sum += sse;
            loss_count += blocks * active * t_out;
            let d_out = diff * (2.0 / count);
            let grads = model.backward(&drop.a_hat, &cache, d_out.view());
            adam.update(&mut model, &grads);
        }
        epoch_loss.push(loss_sum / loss_count.max(1) as f64);
    }

    let trained = TrainedModel::new(model, graph, scaler, config.drop_mode)?;
    let (test_accuracy, test_rmse) = evaluate_on_test(&trained, dataset)?;
    Ok(TrainOutcome {
        model: trained,
        history: TrainHistory {
            epoch_loss,
            test_accuracy,
            test_rmse,
            seconds: started.elapsed().as_secs_f64(),
        },
    })
}

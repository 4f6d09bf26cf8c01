use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;

/// L-layer graph convolution with a per-node affine readout:
///
/// ```text
/// H(0) = X,  H(l+1) = relu(Â H(l) W(l)),  Y = H(L) R + 1 bᵀ
/// ```
///
/// The readout never mixes nodes, so output `i` depends only on inputs
/// within `L` hops of `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnPredictor {
    layers: Vec<Array2<f64>>,
    readout: Array2<f64>,
    readout_bias: Array1<f64>,
}

/// Activations kept from a forward pass over a stack of `blocks` windows.
#[derive(Debug)]
pub(crate) struct ForwardCache {
    blocks: usize,
    /// `Â H(l)` per layer.
    propagated: Vec<Array2<f64>>,
    /// `Â H(l) W(l)` per layer.
    preact: Vec<Array2<f64>>,
    /// `H(L)`.
    last_hidden: Array2<f64>,
    pub output: Array2<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Gradients {
    pub layers: Vec<Array2<f64>>,
    pub readout: Array2<f64>,
    pub readout_bias: Array1<f64>,
}

impl GcnPredictor {
    /// Fresh model with weights uniform in `±1/sqrt(fan_in)` and zero
    /// readout bias.
    pub fn new(input_width: usize, hidden: &[usize], horizon: usize, seed: u64) -> Result<Self> {
        if input_width == 0 || horizon == 0 || hidden.is_empty() || hidden.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "invalid GCN shape: input {input_width}, hidden {hidden:?}, horizon {horizon}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = |rows: usize, cols: usize| {
            let bound = 1.0 / (rows as f64).sqrt();
            Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-bound..=bound))
        };
        let mut layers = Vec::with_capacity(hidden.len());
        let mut fan_in = input_width;
        for &width in hidden {
            layers.push(init(fan_in, width));
            fan_in = width;
        }
        let readout = init(fan_in, horizon);
        Ok(Self {
            layers,
            readout,
            readout_bias: Array1::zeros(horizon),
        })
    }

    pub fn from_weights(
        layers: Vec<Array2<f64>>,
        readout: Array2<f64>,
        readout_bias: Array1<f64>,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("GCN needs at least one layer".into()));
        }
        let mut width = layers[0].nrows();
        for (l, w) in layers.iter().chain(std::iter::once(&readout)).enumerate() {
            if w.nrows() != width {
                return Err(Error::ShapeMismatch {
                    expected: format!("layer {l} with {width} rows"),
                    actual: format!("{}x{}", w.nrows(), w.ncols()),
                });
            }
            width = w.ncols();
        }
        if readout_bias.len() != readout.ncols() {
            return Err(Error::ShapeMismatch {
                expected: format!("bias of length {}", readout.ncols()),
                actual: format!("length {}", readout_bias.len()),
            });
        }
        Ok(Self {
            layers,
            readout,
            readout_bias,
        })
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].nrows()
    }

    pub fn horizon(&self) -> usize {
        self.readout.ncols()
    }

    pub fn hidden_dims(&self) -> Vec<usize> {
        self.layers.iter().map(|w| w.ncols()).collect()
    }

    pub fn layers(&self) -> &[Array2<f64>] {
        &self.layers
    }

    pub fn readout(&self) -> &Array2<f64> {
        &self.readout
    }

    pub fn readout_bias(&self) -> &Array1<f64> {
        &self.readout_bias
    }

    /// Prediction `N × T` for one feature window `N × S`.
    pub fn forward(&self, a_hat: &NormalizedAdjacency, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let expected = (a_hat.n_nodes(), self.input_width());
        if x.dim() != expected {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", expected.0, expected.1),
                actual: format!("{}x{}", x.nrows(), x.ncols()),
            });
        }
        let mut h = x.to_owned();
        for w in &self.layers {
            let mut z = a_hat.propagate(h.view()).dot(w);
            z.mapv_inplace(relu);
            h = z;
        }
        let mut y = h.dot(&self.readout);
        y += &self.readout_bias;
        Ok(y)
    }

    /// Forward pass over `blocks` windows stacked vertically
    /// (`blocks·N × S`), keeping what backpropagation needs.
    pub(crate) fn forward_cached(
        &self,
        a_hat: &NormalizedAdjacency,
        x: ArrayView2<'_, f64>,
        blocks: usize,
    ) -> ForwardCache {
        let mut propagated = Vec::with_capacity(self.layers.len());
        let mut preact = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for w in &self.layers {
            let m = propagate_blocks(a_hat, h.view(), blocks, false);
            let z = m.dot(w);
            h = z.mapv(relu);
            propagated.push(m);
            preact.push(z);
        }
        let mut output = h.dot(&self.readout);
        output += &self.readout_bias;
        ForwardCache {
            blocks,
            propagated,
            preact,
            last_hidden: h,
            output,
        }
    }

    /// Weight gradients given `dL/dY` for the stacked output.
    pub(crate) fn backward(
        &self,
        a_hat: &NormalizedAdjacency,
        cache: &ForwardCache,
        d_out: ArrayView2<'_, f64>,
    ) -> Gradients {
        let readout = cache.last_hidden.t().dot(&d_out);
        let readout_bias = d_out.sum_axis(Axis(0));
        let mut d_hidden = d_out.dot(&self.readout.t());
        let mut layers = vec![Array2::zeros((0, 0)); self.layers.len()];
        for l in (0..self.layers.len()).rev() {
            let mut d_z = d_hidden;
            ndarray::Zip::from(&mut d_z)
                .and(&cache.preact[l])
                .for_each(|g, &z| {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                });
            layers[l] = cache.propagated[l].t().dot(&d_z);
            if l == 0 {
                break;
            }
            let d_m = d_z.dot(&self.layers[l].t());
            d_hidden = propagate_blocks(a_hat, d_m.view(), cache.blocks, true);
        }
        Gradients {
            layers,
            readout,
            readout_bias,
        }
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = ndarray::ArrayViewMutD<'_, f64>> {
        self.layers
            .iter_mut()
            .map(|w| w.view_mut().into_dyn())
            .chain(std::iter::once(self.readout.view_mut().into_dyn()))
            .chain(std::iter::once(self.readout_bias.view_mut().into_dyn()))
    }
}

impl Gradients {
    pub(crate) fn tensors(&self) -> impl Iterator<Item = ndarray::ArrayViewD<'_, f64>> {
        self.layers
            .iter()
            .map(|w| w.view().into_dyn())
            .chain(std::iter::once(self.readout.view().into_dyn()))
            .chain(std::iter::once(self.readout_bias.view().into_dyn()))
    }
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

fn propagate_blocks(
    a_hat: &NormalizedAdjacency,
    h: ArrayView2<'_, f64>,
    blocks: usize,
    transpose: bool,
) -> Array2<f64> {
    let n = a_hat.n_nodes();
    let mut out = Array2::zeros(h.dim());
    for b in 0..blocks {
        let rows = s![b * n..(b + 1) * n, ..];
        a_hat.propagate_into(h.slice(rows), out.slice_mut(rows), transpose);
    }
    out
}

use ndarray::{s, Array2};

use crate::error::{Error, Result};

/// Sliding windows over a `steps × N` speed matrix.
///
/// Window `t` uses rows `t..t+S` as features and `t+S..t+S+T` as target, both
/// transposed to node-major (`N × S`, `N × T`). Training windows end at or
/// before the split row; test windows start at or after it, so no window
/// straddles the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    speeds: Array2<f64>,
    window: usize,
    horizon: usize,
    split: usize,
}

impl WindowedDataset {
    pub fn new(speeds: Array2<f64>, window: usize, horizon: usize, train_fraction: f64) -> Result<Self> {
        if window == 0 || horizon == 0 {
            return Err(Error::InvalidArgument("window and horizon must be positive".into()));
        }
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train_fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        let steps = speeds.nrows();
        let split = (train_fraction * steps as f64).round() as usize;
        let ds = Self {
            speeds,
            window,
            horizon,
            split,
        };
        if ds.train_starts().is_empty() || ds.test_starts().is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{steps} steps are too few for window {window}, horizon {horizon} on both sides of the split"
            )));
        }
        Ok(ds)
    }

    pub fn n_nodes(&self) -> usize {
        self.speeds.ncols()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn speeds(&self) -> &Array2<f64> {
        &self.speeds
    }

    /// Rows used for fitting the scaler.
    pub fn train_rows(&self) -> ndarray::ArrayView2<'_, f64> {
        self.speeds.slice(s![..self.split, ..])
    }

    fn span(&self) -> usize {
        self.window + self.horizon
    }

    pub fn train_starts(&self) -> Vec<usize> {
        (0..(self.split + 1).saturating_sub(self.span())).collect()
    }

    pub fn test_starts(&self) -> Vec<usize> {
        let end = (self.speeds.nrows() + 1).saturating_sub(self.span());
        (self.split..end).collect()
    }

    /// `(X, Y)` for the window starting at row `start`.
    pub fn sample(&self, start: usize) -> (Array2<f64>, Array2<f64>) {
        let x = self
            .speeds
            .slice(s![start..start + self.window, ..])
            .t()
            .to_owned();
        let y = self
            .speeds
            .slice(s![start + self.window..start + self.span(), ..])
            .t()
            .to_owned();
        (x, y)
    }
}

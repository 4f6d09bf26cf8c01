use ndarray::{ArrayBase, Data, Dimension};

use crate::error::{Error, Result};

fn check_shapes<S1, S2, D>(y_true: &ArrayBase<S1, D>, y_pred: &ArrayBase<S2, D>) -> Result<()>
where
    S1: Data<Elem = f64>,
    S2: Data<Elem = f64>,
    D: Dimension,
{
    if y_true.shape() != y_pred.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", y_true.shape()),
            actual: format!("{:?}", y_pred.shape()),
        });
    }
    Ok(())
}

/// `1 - ||Y - Ŷ||_F / ||Y||_F`.
pub fn accuracy<S1, S2, D>(y_true: &ArrayBase<S1, D>, y_pred: &ArrayBase<S2, D>) -> Result<f64>
where
    S1: Data<Elem = f64>,
    S2: Data<Elem = f64>,
    D: Dimension,
{
    check_shapes(y_true, y_pred)?;
    let norm = y_true.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidArgument(
            "accuracy is undefined for an all-zero target".into(),
        ));
    }
    let err = y_true
        .iter()
        .zip(y_pred.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(1.0 - err / norm)
}

pub fn rmse<S1, S2, D>(y_true: &ArrayBase<S1, D>, y_pred: &ArrayBase<S2, D>) -> Result<f64>
where
    S1: Data<Elem = f64>,
    S2: Data<Elem = f64>,
    D: Dimension,
{
    check_shapes(y_true, y_pred)?;
    if y_true.is_empty() {
        return Ok(0.0);
    }
    let sse: f64 = y_true
        .iter()
        .zip(y_pred.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sse / y_true.len() as f64).sqrt())
}

//! Binary cross-entropy over sigmoid outputs.

use super::tensor::Tensor;
use super::NnError;

/// Predictions are clamped into [EPS, 1-EPS] before the log so a saturated
/// sigmoid cannot produce an infinite loss or gradient.
pub const EPS: f64 = 1e-7;

/// Mean binary cross-entropy: -(1/n) sum y*ln(p) + (1-y)*ln(1-p).
pub fn bce(pred: &Tensor, target: &Tensor) -> Result<f64, NnError> {
    check_pair(pred, target)?;
    let n = pred.len() as f64;
    let mut total = 0.0;
    for (&p, &y) in pred.data().iter().zip(target.data()) {
        let p = p.clamp(EPS, 1.0 - EPS);
        total -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    Ok(total / n)
}

/// Gradient of `bce` with respect to the predictions:
/// dL/dp_i = (1/n) * (p_i - y_i) / (p_i (1 - p_i)), with the same clamp.
pub fn bce_grad(pred: &Tensor, target: &Tensor) -> Result<Tensor, NnError> {
    check_pair(pred, target)?;
    let n = pred.len() as f64;
    let mut grad = pred.clone();
    for (g, &y) in grad.data_mut().iter_mut().zip(target.data()) {
        let p = g.clamp(EPS, 1.0 - EPS);
        *g = (p - y) / (p * (1.0 - p) * n);
    }
    Ok(grad)
}

fn check_pair(pred: &Tensor, target: &Tensor) -> Result<(), NnError> {
    if pred.shape() != target.shape() {
        return Err(NnError::ShapeMismatch(format!(
            "loss: pred {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    if pred.is_empty() {
        return Err(NnError::ShapeMismatch("loss over empty tensors".into()));
    }
    Ok(())
}

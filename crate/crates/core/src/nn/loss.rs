//! Training losses. Each returns the scalar loss and its gradient with
//! respect to the predictions.

use crate::error::{Error, Result};

/// Clamp applied to probabilities before taking logarithms.
pub const BCE_EPS: f64 = 1e-12;

/// Mean squared error `(1/n) Σ (p - t)^2`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::contract(format!(
            "mse: prediction length {} vs target length {}",
            pred.len(),
            target.len()
        )));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((loss / n, grad))
}

/// Binary cross-entropy `-(1/n) Σ [t ln p + (1 - t) ln(1 - p)]`.
///
/// Predictions must lie in `[0, 1]`; they are clamped to
/// `[BCE_EPS, 1 - BCE_EPS]` before the logarithms.
pub fn bce_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::contract(format!(
            "bce: prediction length {} vs target length {}",
            pred.len(),
            target.len()
        )));
    }
    if let Some(p) = pred.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::contract(format!("bce: prediction {p} outside [0, 1]")));
    }
    if let Some(t) = target.iter().find(|t| **t != 0.0 && **t != 1.0) {
        return Err(Error::contract(format!("bce: target {t} is not a bit")));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
            loss -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
            (p - t) / (p * (1.0 - p) * n)
        })
        .collect();
    Ok((loss / n, grad))
}

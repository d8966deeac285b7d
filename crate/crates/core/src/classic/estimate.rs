//! Least-squares channel estimation from a known pilot sequence.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Known pilot symbols and what the receiver observed for them.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotRecord {
    pub symbols: Vec<f64>,
    pub received: Vec<f64>,
}

impl PilotRecord {
    pub fn new(symbols: Vec<f64>, received: Vec<f64>) -> Result<Self> {
        if symbols.len() != received.len() {
            return Err(Error::contract(format!(
                "pilot has {} symbols but {} observations",
                symbols.len(),
                received.len()
            )));
        }
        Ok(PilotRecord { symbols, received })
    }
}

/// Causal convolution matrix: row i, column k holds `s[i - k]` (zero before the start).
fn convolution_matrix(symbols: &[f64], taps: usize) -> DMatrix<f64> {
    DMatrix::from_fn(symbols.len(), taps, |i, k| if i >= k { symbols[i - k] } else { 0.0 })
}

/// `argmin ‖r − S h‖²` over `taps` coefficients, solved via the normal equations.
pub fn ls_channel_estimate(pilot: &PilotRecord, taps: usize) -> Result<Vec<f64>> {
    let n = pilot.symbols.len();
    if taps == 0 || n < taps {
        return Err(Error::contract(format!("need at least {taps} pilot symbols, got {n}")));
    }
    if pilot.symbols.len() != pilot.received.len() {
        return Err(Error::contract("pilot symbol and observation lengths differ"));
    }
    if pilot.symbols.iter().chain(&pilot.received).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("pilot record"));
    }
    let s = convolution_matrix(&pilot.symbols, taps);
    let r = DVector::from_column_slice(&pilot.received);
    let gram = s.transpose() * &s;
    let rhs = s.transpose() * r;

    let svd = gram.clone().svd(false, false);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if max == 0.0 || min <= max * 1e-12 {
        return Err(Error::Singular(format!(
            "pilot matrix is rank deficient (singular values {min:e} / {max:e})"
        )));
    }
    let h = gram
        .cholesky()
        .ok_or_else(|| Error::Singular("normal equations are not positive definite".into()))?
        .solve(&rhs);
    Ok(h.iter().copied().collect())
}

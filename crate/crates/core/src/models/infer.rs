use crate::error::{Error, Result};
use crate::nn::{Network, Tensor};

/// Runs the equalizer on one received sequence. Output length equals input length.
pub fn equalize(cnn: &Network, received: &[f64]) -> Result<Vec<f64>> {
    if received.is_empty() {
        return Err(Error::contract("cannot equalize an empty sequence"));
    }
    let input = Tensor::new(vec![1, received.len()], received.to_vec())?;
    Ok(cnn.forward(&input)?.into_data())
}

/// Hard message bits from decoder probabilities; exactly 0.5 gives 1.
pub fn threshold_bits(probabilities: &[f64]) -> Vec<u8> {
    probabilities.iter().map(|&p| u8::from(p >= 0.5)).collect()
}

/// Decodes one frame of soft values into message bits.
pub fn decode_nnd(nnd: &Network, soft: &[f64]) -> Result<Vec<u8>> {
    let probs = nnd.forward(&Tensor::from_vec(soft.to_vec()))?;
    Ok(threshold_bits(probs.data()))
}

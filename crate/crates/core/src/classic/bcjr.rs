//! Symbol-by-symbol MAP equalization over the ISI trellis (forward-backward).

use crate::channel::{ChannelSpec, Framing, Nonlinearity};
use crate::error::{Error, Result};

/// Channel trellis. A state holds the previous `L - 1` symbols; bit `j` of
/// the state index is set when symbol `s[t-1-j]` is −1. Input bit 0 is the
/// symbol +1, input bit 1 is −1.
#[derive(Debug, Clone, PartialEq)]
pub struct Trellis {
    taps: Vec<f64>,
    nonlinearity: Nonlinearity,
    memory: usize,
}

#[inline]
fn symbol(bit: usize) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

impl Trellis {
    pub fn new(taps: &[f64], nonlinearity: Nonlinearity) -> Result<Self> {
        if taps.is_empty() || taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidSpec("trellis needs finite taps".into()));
        }
        if taps.len() > 16 {
            return Err(Error::InvalidSpec(format!(
                "{} taps give too many trellis states",
                taps.len()
            )));
        }
        Ok(Trellis {
            taps: taps.to_vec(),
            nonlinearity,
            memory: taps.len() - 1,
        })
    }

    pub fn from_channel(spec: &ChannelSpec) -> Result<Self> {
        Trellis::new(&spec.taps, spec.nonlinearity)
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory
    }

    #[inline]
    pub fn next_state(&self, state: usize, input: usize) -> usize {
        ((state << 1) | input) & (self.num_states() - 1)
    }

    /// Noiseless output when `input` is sent from `state`, with only the
    /// `known` most recent history symbols present (older ones are zero).
    #[inline]
    pub fn output(&self, state: usize, input: usize, known: usize) -> f64 {
        let mut v = self.taps[0] * symbol(input);
        for k in 1..=self.memory.min(known) {
            v += self.taps[k] * symbol((state >> (k - 1)) & 1);
        }
        self.nonlinearity.eval(v)
    }

    /// Output `j` samples after the last symbol of an `n`-symbol frame,
    /// when no further symbols are sent.
    fn tail_output(&self, state: usize, j: usize, n: usize) -> f64 {
        let mut v = 0.0;
        for k in (j + 1)..=self.memory {
            let bit = k - j - 1;
            if bit < n {
                v += self.taps[k] * symbol((state >> bit) & 1);
            }
        }
        self.nonlinearity.eval(v)
    }
}

/// Number of symbols in a frame with `received_len` observations.
pub fn symbols_in_frame(trellis: &Trellis, received_len: usize, framing: Framing) -> Result<usize> {
    match framing {
        Framing::Tail => received_len.checked_sub(trellis.memory()).ok_or_else(|| {
            Error::contract(format!(
                "tail framing needs at least {} samples, got {received_len}",
                trellis.memory()
            ))
        }),
        Framing::Truncated | Framing::Stream => Ok(received_len),
    }
}

/// Posterior `P(s_i = +1 | r)` for every symbol of the frame.
///
/// Zero-history framings start from the all-zero history; [`Framing::Stream`]
/// starts from a uniform state. The final state is free; with
/// [`Framing::Tail`] the trailing samples weight it.
pub fn bcjr_equalize(trellis: &Trellis, received: &[f64], sigma: f64, framing: Framing) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::contract(format!("BCJR needs sigma > 0, got {sigma}")));
    }
    if received.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("BCJR received samples"));
    }
    let n = symbols_in_frame(trellis, received.len(), framing)?;
    let ns = trellis.num_states();
    let inv = 1.0 / (2.0 * sigma * sigma);
    let known = |t: usize| match framing {
        Framing::Stream => trellis.memory(),
        Framing::Truncated | Framing::Tail => t,
    };

    // Log-domain recursions: at small σ the branch metrics of every reachable
    // state can sit far below anything representable as a probability.
    let mut gamma = vec![0.0; n * ns * 2];
    for t in 0..n {
        for s in 0..ns {
            for b in 0..2 {
                let d = received[t] - trellis.output(s, b, known(t));
                gamma[(t * ns + s) * 2 + b] = -d * d * inv;
            }
        }
    }

    let mut alpha = vec![f64::NEG_INFINITY; (n + 1) * ns];
    match framing {
        Framing::Stream => alpha[..ns].fill(0.0),
        Framing::Truncated | Framing::Tail => alpha[0] = 0.0,
    }
    for t in 0..n {
        let (cur, next) = alpha.split_at_mut((t + 1) * ns);
        let cur = &cur[t * ns..];
        let next = &mut next[..ns];
        for s in 0..ns {
            if cur[s] == f64::NEG_INFINITY {
                continue;
            }
            for b in 0..2 {
                let j = trellis.next_state(s, b);
                next[j] = log_add(next[j], cur[s] + gamma[(t * ns + s) * 2 + b]);
            }
        }
        shift(next);
    }

    let mut beta_next = vec![0.0; ns];
    if framing == Framing::Tail {
        for (s, e) in beta_next.iter_mut().enumerate() {
            *e = (0..trellis.memory())
                .map(|j| {
                    let d = received[n + j] - trellis.tail_output(s, j, n);
                    -d * d * inv
                })
                .sum();
        }
        shift(&mut beta_next);
    }

    let mut posteriors = vec![0.0; n];
    let mut beta = vec![0.0; ns];
    for t in (0..n).rev() {
        let a = &alpha[t * ns..(t + 1) * ns];
        let mut mass = [f64::NEG_INFINITY; 2];
        beta.fill(f64::NEG_INFINITY);
        for s in 0..ns {
            for b in 0..2 {
                let w = gamma[(t * ns + s) * 2 + b] + beta_next[trellis.next_state(s, b)];
                beta[s] = log_add(beta[s], w);
                mass[b] = log_add(mass[b], a[s] + w);
            }
        }
        // P(+1) = 1 / (1 + e^(m1 - m0))
        posteriors[t] = 1.0 / (1.0 + (mass[1] - mass[0]).exp());
        shift(&mut beta);
        std::mem::swap(&mut beta, &mut beta_next);
    }
    Ok(posteriors)
}

#[inline]
fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Subtracts the maximum so the largest entry is 0.
fn shift(v: &mut [f64]) {
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top.is_finite() {
        v.iter_mut().for_each(|x| *x -= top);
    }
}

/// `ln P(+1) / P(-1)`, saturated at ±50.
pub fn posterior_llr(p_plus: f64) -> f64 {
    let p = p_plus.clamp(1e-22, 1.0 - 1e-22);
    (p / (1.0 - p)).ln().clamp(-50.0, 50.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::sigmoid;

    #[test]
    fn memoryless_channel_is_logistic() {
        let t = Trellis::new(&[1.0], Nonlinearity::Identity).unwrap();
        let sigma = 0.5f64.sqrt();
        let p = bcjr_equalize(&t, &[1.0, -0.3, 0.0], sigma, Framing::Truncated).unwrap();
        assert!((p[0] - 0.98201).abs() < 1e-5);
        for (pi, r) in p.iter().zip([1.0, -0.3, 0.0]) {
            assert!((pi - sigmoid(2.0 * r / 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_noise_is_uninformative() {
        let t = Trellis::new(&[0.3482, 0.8704, 0.3482], Nonlinearity::Identity).unwrap();
        let r = [1.2, -0.4, 0.9, 0.1, -1.5];
        for framing in [Framing::Truncated, Framing::Tail, Framing::Stream] {
            let p = bcjr_equalize(&t, &r, 1e4, framing).unwrap();
            assert!(p.iter().all(|p| (p - 0.5).abs() < 1e-3));
        }
    }

    #[test]
    fn rejects_bad_sigma() {
        let t = Trellis::new(&[1.0, 0.5], Nonlinearity::Identity).unwrap();
        assert!(bcjr_equalize(&t, &[0.0], 0.0, Framing::Truncated).is_err());
        assert!(bcjr_equalize(&t, &[0.0], -1.0, Framing::Truncated).is_err());
        assert!(bcjr_equalize(&t, &[], 1.0, Framing::Tail).is_err());
    }

    #[test]
    fn state_count() {
        let t = Trellis::new(&[1.0, 0.2, 0.1, 0.05], Nonlinearity::Cubic).unwrap();
        assert_eq!(t.num_states(), 8);
        assert_eq!(t.next_state(0b101, 1), 0b011);
    }

    #[test]
    fn noiseless_frame_decides_correctly() {
        let t = Trellis::new(&[0.3482, 0.8704, 0.3482], Nonlinearity::PolyCosMagnitude).unwrap();
        let s = [1.0, -1.0, -1.0, 1.0, 1.0, -1.0];
        let spec = ChannelSpec::new(vec![0.3482, 0.8704, 0.3482], Nonlinearity::PolyCosMagnitude, 0.0).unwrap();
        let mut rng = crate::rng::stream(0, crate::rng::Domain::Misc, 0, 0);
        let r = crate::channel::transmit_symbols(&s, &spec, Framing::Tail, &mut rng);
        let p = bcjr_equalize(&t, &r, 0.05, Framing::Tail).unwrap();
        for (pi, si) in p.iter().zip(s) {
            assert_eq!(*pi > 0.5, si > 0.0);
        }
    }
}

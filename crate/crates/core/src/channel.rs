//! Dispersive nonlinear channel: BPSK mapping, causal FIR inter-symbol
//! interference, a memoryless nonlinearity and additive white Gaussian noise.
//!
//! `r_i = g(v_i) + n_i` with `v = h ⊗ s` and `n_i ~ N(0, σ²)`.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Three-tap dispersive test channel `0.3482 + 0.8704 z^-1 + 0.3482 z^-2`.
pub const LINEAR_TEST_TAPS: [f64; 3] = [0.3482, 0.8704, 0.3482];

/// Two-tap channel used for the decision-boundary plot.
pub const BOUNDARY_TAPS: [f64; 2] = [1.0, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Nonlinearity {
    #[default]
    Identity,
    /// `g(v) = v + 0.2v² - 0.1v³ + 0.5 cos(πv)`.
    PolyCos,
    /// Odd-symmetric magnitude form `g(v) = sign(v)·(|v| + 0.2|v|² - 0.1|v|³ + 0.5 cos(π|v|))`.
    PolyCosMagnitude,
    /// `g(v) = v - 0.9v³`.
    Cubic,
}

impl Nonlinearity {
    #[inline]
    pub fn eval(self, v: f64) -> f64 {
        match self {
            Nonlinearity::Identity => v,
            Nonlinearity::PolyCos => v + 0.2 * v * v - 0.1 * v * v * v + 0.5 * (PI * v).cos(),
            Nonlinearity::PolyCosMagnitude => {
                let a = v.abs();
                let m = a + 0.2 * a * a - 0.1 * a * a * a + 0.5 * (PI * a).cos();
                if v < 0.0 {
                    -m
                } else {
                    m
                }
            }
            Nonlinearity::Cubic => v - 0.9 * v * v * v,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Nonlinearity::Identity => "identity",
            Nonlinearity::PolyCos => "paper_poly_cos",
            Nonlinearity::PolyCosMagnitude => "paper_poly_cos_magnitude",
            Nonlinearity::Cubic => "cubic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "identity" | "none" | "linear" => Ok(Nonlinearity::Identity),
            "paper_poly_cos" | "poly_cos" => Ok(Nonlinearity::PolyCos),
            "paper_poly_cos_magnitude" => Ok(Nonlinearity::PolyCosMagnitude),
            "cubic" => Ok(Nonlinearity::Cubic),
            other => Err(Error::Parse(format!("unknown nonlinearity `{other}`"))),
        }
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the SNR figure maps onto noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnrConvention {
    /// Energy per channel symbol over N0.
    #[default]
    EsN0,
    /// Energy per information bit over N0; needs the code rate.
    EbN0,
}

impl SnrConvention {
    pub fn name(self) -> &'static str {
        match self {
            SnrConvention::EsN0 => "es_n0",
            SnrConvention::EbN0 => "eb_n0",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "es_n0" | "esn0" | "snr" => Ok(SnrConvention::EsN0),
            "eb_n0" | "ebn0" => Ok(SnrConvention::EbN0),
            other => Err(Error::Parse(format!("unknown SNR convention `{other}`"))),
        }
    }
}

impl fmt::Display for SnrConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    pub value_db: f64,
    pub convention: SnrConvention,
    /// Code rate, used only by the Eb/N0 convention.
    pub rate: f64,
}

impl SnrPoint {
    pub fn es_n0(value_db: f64) -> Self {
        SnrPoint {
            value_db,
            convention: SnrConvention::EsN0,
            rate: 1.0,
        }
    }

    pub fn eb_n0(value_db: f64, rate: f64) -> Self {
        SnrPoint {
            value_db,
            convention: SnrConvention::EbN0,
            rate,
        }
    }
}

/// Per-sample noise standard deviation for unit-energy BPSK.
///
/// Es/N0: `σ² = 1 / (2·10^(dB/10))`; Eb/N0: `σ² = 1 / (2·R·10^(dB/10))`.
pub fn sigma_from_snr(point: SnrPoint) -> Result<f64> {
    if !point.value_db.is_finite() {
        return Err(Error::contract("SNR must be finite"));
    }
    let rate = match point.convention {
        SnrConvention::EsN0 => 1.0,
        SnrConvention::EbN0 => {
            if !(point.rate > 0.0 && point.rate <= 1.0) {
                return Err(Error::contract(format!("code rate {} outside (0, 1]", point.rate)));
            }
            point.rate
        }
    };
    let linear = 10f64.powf(point.value_db / 10.0);
    Ok((1.0 / (2.0 * rate * linear)).sqrt())
}

/// What the receiver observes of one frame of `n` symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Framing {
    /// Zero initial state, output truncated to `n` samples.
    #[default]
    Truncated,
    /// Zero initial state, all `n + L - 1` samples of the linear convolution.
    Tail,
    /// Frame cut from a continuous stream: the `L - 1` preceding symbols are
    /// random, `n` samples observed.
    Stream,
}

impl Framing {
    pub fn name(self) -> &'static str {
        match self {
            Framing::Truncated => "truncated",
            Framing::Tail => "tail",
            Framing::Stream => "stream",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "truncated" => Ok(Framing::Truncated),
            "tail" => Ok(Framing::Tail),
            "stream" => Ok(Framing::Stream),
            other => Err(Error::Parse(format!("unknown framing `{other}`"))),
        }
    }

    /// Number of received samples for a frame of `n` symbols over `taps` taps.
    pub fn received_len(self, n: usize, taps: usize) -> usize {
        match self {
            Framing::Tail => n + taps.saturating_sub(1),
            Framing::Truncated | Framing::Stream => n,
        }
    }
}

impl fmt::Display for Framing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub taps: Vec<f64>,
    pub nonlinearity: Nonlinearity,
    pub noise_sigma: f64,
}

impl ChannelSpec {
    pub fn new(taps: Vec<f64>, nonlinearity: Nonlinearity, noise_sigma: f64) -> Result<Self> {
        let spec = ChannelSpec {
            taps,
            nonlinearity,
            noise_sigma,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Linear test channel with no nonlinearity.
    pub fn linear_test(noise_sigma: f64) -> Self {
        ChannelSpec {
            taps: LINEAR_TEST_TAPS.to_vec(),
            nonlinearity: Nonlinearity::Identity,
            noise_sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(Error::InvalidSpec("channel needs at least one tap".into()));
        }
        if self.taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidSpec("channel taps must be finite".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "noise sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    pub fn with_sigma(&self, noise_sigma: f64) -> Self {
        ChannelSpec {
            noise_sigma,
            ..self.clone()
        }
    }

    pub fn memory(&self) -> usize {
        self.taps.len() - 1
    }
}

/// Bit 0 → +1, bit 1 → −1.
pub fn bpsk_modulate(bits: &[u8]) -> Result<Vec<f64>> {
    bits.iter()
        .map(|&b| match b {
            0 => Ok(1.0),
            1 => Ok(-1.0),
            other => Err(Error::contract(format!("bit value {other} is not binary"))),
        })
        .collect()
}

/// Hard decision: non-negative → 0, negative → 1.
pub fn bpsk_demodulate(symbols: &[f64]) -> Vec<u8> {
    symbols.iter().map(|&s| u8::from(s < 0.0)).collect()
}

/// Causal convolution with zero initial state, truncated to the input length.
pub fn fir_convolve(symbols: &[f64], taps: &[f64]) -> Result<Vec<f64>> {
    if taps.is_empty() {
        return Err(Error::contract("fir_convolve: empty tap vector"));
    }
    Ok(convolve(symbols, taps, symbols.len()))
}

/// Full linear convolution of length `n + L - 1`.
pub fn fir_convolve_full(symbols: &[f64], taps: &[f64]) -> Result<Vec<f64>> {
    if taps.is_empty() {
        return Err(Error::contract("fir_convolve: empty tap vector"));
    }
    if symbols.is_empty() {
        return Ok(Vec::new());
    }
    Ok(convolve(symbols, taps, symbols.len() + taps.len() - 1))
}

fn convolve(symbols: &[f64], taps: &[f64], out_len: usize) -> Vec<f64> {
    (0..out_len)
        .map(|i| {
            taps.iter()
                .enumerate()
                .filter(|&(k, _)| k <= i && i - k < symbols.len())
                .map(|(k, h)| h * symbols[i - k])
                .sum()
        })
        .collect()
}

pub fn apply_nonlinearity(v: &[f64], nonlinearity: Nonlinearity) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("channel nonlinearity input"));
    }
    Ok(v.iter().map(|&x| nonlinearity.eval(x)).collect())
}

/// Adds i.i.d. `N(0, σ²)` noise in place.
pub fn add_awgn<R: Rng + ?Sized>(samples: &mut [f64], sigma: f64, rng: &mut R) {
    if sigma == 0.0 {
        return;
    }
    for s in samples {
        *s += sigma * rng.sample::<f64, _>(StandardNormal);
    }
}

/// `r = g(h ⊗ s) + n` for a bit frame, truncated to the frame length.
pub fn transmit<R: Rng + ?Sized>(bits: &[u8], spec: &ChannelSpec, rng: &mut R) -> Result<Vec<f64>> {
    spec.validate()?;
    let symbols = bpsk_modulate(bits)?;
    let v = fir_convolve(&symbols, &spec.taps)?;
    let mut r = apply_nonlinearity(&v, spec.nonlinearity)?;
    add_awgn(&mut r, spec.noise_sigma, rng);
    Ok(r)
}

/// Sends a symbol frame under the given framing. For [`Framing::Stream`] the
/// `L - 1` preceding symbols are drawn from `rng` before the noise.
pub fn transmit_symbols<R: Rng + ?Sized>(
    symbols: &[f64],
    spec: &ChannelSpec,
    framing: Framing,
    rng: &mut R,
) -> Vec<f64> {
    let taps = &spec.taps;
    let mut v = match framing {
        Framing::Truncated => convolve(symbols, taps, symbols.len()),
        Framing::Tail => convolve(symbols, taps, framing.received_len(symbols.len(), taps.len())),
        Framing::Stream => {
            let memory = taps.len() - 1;
            let mut extended: Vec<f64> = (0..memory)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            extended.extend_from_slice(symbols);
            convolve(&extended, taps, extended.len()).split_off(memory)
        }
    };
    for x in &mut v {
        *x = spec.nonlinearity.eval(*x);
    }
    add_awgn(&mut v, spec.noise_sigma, rng);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, Domain};
    use approx::assert_abs_diff_eq;

    #[test]
    fn bpsk_mapping() {
        assert_eq!(bpsk_modulate(&[0, 1, 0]).unwrap(), vec![1.0, -1.0, 1.0]);
        assert!(bpsk_modulate(&[]).unwrap().is_empty());
        assert!(matches!(bpsk_modulate(&[0, 2]), Err(Error::Contract(_))));
    }

    #[test]
    fn bpsk_round_trip_exhaustive() {
        for word in 0u32..256 {
            let bits: Vec<u8> = (0..8).map(|i| ((word >> i) & 1) as u8).collect();
            assert_eq!(bpsk_demodulate(&bpsk_modulate(&bits).unwrap()), bits);
        }
    }

    #[test]
    fn fir_examples() {
        let out = fir_convolve(&[1.0, 0.0, 0.0], &LINEAR_TEST_TAPS).unwrap();
        assert_eq!(out, vec![0.3482, 0.8704, 0.3482]);
        let out = fir_convolve(&[1.0, -1.0, 1.0], &LINEAR_TEST_TAPS).unwrap();
        for (o, e) in out.iter().zip([0.3482, 0.5222, -0.1740]) {
            assert_abs_diff_eq!(*o, e, epsilon = 1e-12);
        }
        assert_eq!(fir_convolve(&[0.5, -2.0], &[1.0]).unwrap(), vec![0.5, -2.0]);
        assert!(fir_convolve(&[1.0], &[]).is_err());
    }

    #[test]
    fn full_convolution_keeps_tail() {
        let out = fir_convolve_full(&[1.0, -1.0], &LINEAR_TEST_TAPS).unwrap();
        let expected = [0.3482, 0.8704 - 0.3482, 0.3482 - 0.8704, -0.3482];
        assert_eq!(out.len(), 4);
        for (o, e) in out.iter().zip(expected) {
            assert_abs_diff_eq!(*o, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn nonlinearity_examples() {
        assert_abs_diff_eq!(Nonlinearity::PolyCos.eval(1.0), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(Nonlinearity::PolyCos.eval(0.5), 0.5375, epsilon = 1e-12);
        assert_abs_diff_eq!(Nonlinearity::Cubic.eval(1.0), 0.1, epsilon = 1e-12);
        assert_eq!(Nonlinearity::Identity.eval(-0.3), -0.3);
        // magnitude form is odd
        let g = Nonlinearity::PolyCosMagnitude;
        assert_abs_diff_eq!(g.eval(-0.7), -g.eval(0.7), epsilon = 1e-15);
        assert!(apply_nonlinearity(&[f64::NAN], Nonlinearity::Cubic).is_err());
        assert!(Nonlinearity::parse("tanh").is_err());
    }

    #[test]
    fn sigma_conventions() {
        let s = sigma_from_snr(SnrPoint::es_n0(0.0)).unwrap();
        assert_abs_diff_eq!(s * s, 0.5, epsilon = 1e-15);
        let s = sigma_from_snr(SnrPoint::eb_n0(0.0, 0.5)).unwrap();
        assert_abs_diff_eq!(s * s, 1.0, epsilon = 1e-15);
        let s = sigma_from_snr(SnrPoint::es_n0(10.0)).unwrap();
        assert_abs_diff_eq!(s * s, 0.05, epsilon = 1e-15);
        assert!(sigma_from_snr(SnrPoint::eb_n0(3.0, 0.0)).is_err());
        assert!(sigma_from_snr(SnrPoint::es_n0(f64::NAN)).is_err());
    }

    #[test]
    fn transmit_noiseless_cases() {
        let mut rng = rng::stream(0, Domain::Misc, 0, 0);
        let ident = ChannelSpec::new(vec![1.0], Nonlinearity::Identity, 0.0).unwrap();
        assert_eq!(
            transmit(&[0, 1, 1, 0], &ident, &mut rng).unwrap(),
            vec![1.0, -1.0, -1.0, 1.0]
        );

        // bit pattern 1,0,0 maps to -1,+1,+1; the impulse is the difference from all-zero
        let lin = ChannelSpec::linear_test(0.0);
        let zeros = transmit(&[0, 0, 0], &lin, &mut rng).unwrap();
        let impulse = transmit(&[1, 0, 0], &lin, &mut rng).unwrap();
        let response: Vec<f64> = zeros.iter().zip(&impulse).map(|(a, b)| (a - b) / 2.0).collect();
        for (r, t) in response.iter().zip(LINEAR_TEST_TAPS) {
            assert_abs_diff_eq!(*r, t, epsilon = 1e-12);
        }
    }

    #[test]
    fn transmit_composes_stages() {
        let mut rng = rng::stream(0, Domain::Misc, 0, 0);
        let spec = ChannelSpec::new(LINEAR_TEST_TAPS.to_vec(), Nonlinearity::PolyCos, 0.0).unwrap();
        let bits = [1, 0, 1, 1, 0, 0, 1];
        let direct = apply_nonlinearity(
            &fir_convolve(&bpsk_modulate(&bits).unwrap(), &spec.taps).unwrap(),
            spec.nonlinearity,
        )
        .unwrap();
        assert_eq!(transmit(&bits, &spec, &mut rng).unwrap(), direct);
    }

    #[test]
    fn transmit_is_seeded() {
        let spec = ChannelSpec::linear_test(0.3);
        let bits = [0, 1, 1, 0, 1];
        let a = transmit(&bits, &spec, &mut rng::stream(4, Domain::Misc, 1, 1)).unwrap();
        let b = transmit(&bits, &spec, &mut rng::stream(4, Domain::Misc, 1, 1)).unwrap();
        assert_eq!(a, b);
        let c = transmit(&bits, &spec, &mut rng::stream(4, Domain::Misc, 1, 2)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn framing_lengths() {
        let mut rng = rng::stream(0, Domain::Misc, 0, 0);
        let spec = ChannelSpec::linear_test(0.0);
        let s = [1.0; 16];
        assert_eq!(transmit_symbols(&s, &spec, Framing::Truncated, &mut rng).len(), 16);
        assert_eq!(transmit_symbols(&s, &spec, Framing::Tail, &mut rng).len(), 18);
        assert_eq!(transmit_symbols(&s, &spec, Framing::Stream, &mut rng).len(), 16);
        assert_eq!(Framing::Tail.received_len(16, 3), 18);
    }

    #[test]
    fn stream_framing_sees_random_history() {
        let spec = ChannelSpec::new(vec![1.0, 0.5], Nonlinearity::Identity, 0.0).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..32 {
            let mut rng = rng::stream(1, Domain::Misc, i, 0);
            let r = transmit_symbols(&[1.0, 1.0], &spec, Framing::Stream, &mut rng);
            assert_eq!(r[1], 1.5);
            seen.insert((r[0] * 10.0) as i64);
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![5, 15]);
    }
}

//! Frame generation shared by training and Monte-Carlo evaluation.

use rand::Rng;

use crate::channel::{self, sigma_from_snr, ChannelSpec, Framing, SnrConvention, SnrPoint};
use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::polar::PolarCode;
use crate::rng::{self, Domain};

/// How frames are produced: channel, framing and optional polar code.
/// The channel's own `noise_sigma` is ignored; every call supplies one.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSetup {
    pub channel: ChannelSpec,
    pub framing: Framing,
    /// `None` sends uncoded random symbols.
    pub code: Option<PolarCode>,
    /// Symbols per frame in uncoded mode.
    pub uncoded_len: usize,
}

/// One transmitted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub message: Vec<u8>,
    pub symbols: Vec<f64>,
    pub received: Vec<f64>,
}

impl FrameSetup {
    pub fn coded(channel: ChannelSpec, framing: Framing, code: PolarCode) -> Self {
        let uncoded_len = code.n();
        FrameSetup {
            channel,
            framing,
            code: Some(code),
            uncoded_len,
        }
    }

    pub fn uncoded(channel: ChannelSpec, framing: Framing, len: usize) -> Self {
        FrameSetup {
            channel,
            framing,
            code: None,
            uncoded_len: len,
        }
    }

    /// BPSK over AWGN with the given code, as seen by a stand-alone decoder.
    pub fn awgn(code: PolarCode) -> Self {
        let channel = ChannelSpec::new(vec![1.0], channel::Nonlinearity::Identity, 0.0).expect("valid");
        FrameSetup::coded(channel, Framing::Truncated, code)
    }

    pub fn symbols_per_frame(&self) -> usize {
        self.code.as_ref().map_or(self.uncoded_len, PolarCode::n)
    }

    pub fn message_bits(&self) -> usize {
        self.code.as_ref().map_or(self.uncoded_len, PolarCode::k)
    }

    pub fn received_len(&self) -> usize {
        self.framing
            .received_len(self.symbols_per_frame(), self.channel.taps.len())
    }

    pub fn rate(&self) -> f64 {
        self.code.as_ref().map_or(1.0, PolarCode::rate)
    }

    pub fn snr_point(&self, value_db: f64, convention: SnrConvention) -> SnrPoint {
        match convention {
            SnrConvention::EsN0 => SnrPoint::es_n0(value_db),
            SnrConvention::EbN0 => SnrPoint::eb_n0(value_db, self.rate()),
        }
    }

    pub fn sigma(&self, value_db: f64, convention: SnrConvention) -> Result<f64> {
        sigma_from_snr(self.snr_point(value_db, convention))
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.symbols_per_frame() == 0 {
            return Err(Error::InvalidSpec("frames must carry at least one symbol".into()));
        }
        Ok(())
    }

    /// Draws a message, encodes, modulates and sends it at noise level `sigma`.
    pub fn generate<R: Rng + ?Sized>(&self, sigma: f64, rng: &mut R) -> Frame {
        let message: Vec<u8> = (0..self.message_bits()).map(|_| rng.random_range(0..2u8)).collect();
        let coded = match &self.code {
            Some(code) => code.encode(&message).expect("message length matches code"),
            None => message.clone(),
        };
        let symbols = channel::bpsk_modulate(&coded).expect("bits are binary");
        let spec = self.channel.with_sigma(sigma);
        let received = channel::transmit_symbols(&symbols, &spec, self.framing, rng);
        Frame {
            message,
            symbols,
            received,
        }
    }
}

/// A mini-batch laid out for the networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// `[B, 1, received_len]`.
    pub inputs: Tensor,
    /// `B × symbols_per_frame`, row-major.
    pub symbols: Vec<f64>,
    /// `B × message_bits` as 0.0 / 1.0.
    pub messages: Vec<f64>,
    pub frames: usize,
}

impl Batch {
    /// `frames_per_snr` frames for each noise level. Frame `f` of the batch for
    /// training step `step` uses stream `(seed, domain, step, f)`.
    pub fn generate(
        setup: &FrameSetup,
        sigmas: &[f64],
        frames_per_snr: usize,
        seed: u64,
        domain: Domain,
        step: u64,
    ) -> Batch {
        let frames = sigmas.len() * frames_per_snr;
        let len = setup.received_len();
        let mut inputs = Vec::with_capacity(frames * len);
        let mut symbols = Vec::with_capacity(frames * setup.symbols_per_frame());
        let mut messages = Vec::with_capacity(frames * setup.message_bits());
        for (i, &sigma) in sigmas.iter().enumerate() {
            for j in 0..frames_per_snr {
                let f = (i * frames_per_snr + j) as u64;
                let mut rng = rng::stream(seed, domain, step, f);
                let frame = setup.generate(sigma, &mut rng);
                inputs.extend_from_slice(&frame.received);
                symbols.extend_from_slice(&frame.symbols);
                messages.extend(frame.message.iter().map(|&b| f64::from(b)));
            }
        }
        Batch {
            inputs: Tensor::new(vec![frames, 1, len], inputs).expect("shape matches"),
            symbols,
            messages,
            frames,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coded_frames_have_expected_lengths() {
        let setup = FrameSetup::coded(ChannelSpec::linear_test(0.0), Framing::Tail, PolarCode::default_16_8());
        assert_eq!(setup.symbols_per_frame(), 16);
        assert_eq!(setup.message_bits(), 8);
        assert_eq!(setup.received_len(), 18);
        let mut rng = rng::stream(1, Domain::Misc, 0, 0);
        let f = setup.generate(0.0, &mut rng);
        assert_eq!(f.received.len(), 18);
        let cw = PolarCode::default_16_8().encode(&f.message).unwrap();
        assert_eq!(channel::bpsk_modulate(&cw).unwrap(), f.symbols);
    }

    #[test]
    fn batch_layout_and_determinism() {
        let setup = FrameSetup::uncoded(ChannelSpec::linear_test(0.0), Framing::Truncated, 5);
        let a = Batch::generate(&setup, &[0.1, 0.2], 3, 9, Domain::TrainCnn, 4);
        let b = Batch::generate(&setup, &[0.1, 0.2], 3, 9, Domain::TrainCnn, 4);
        assert_eq!(a, b);
        assert_eq!(a.inputs.shape(), &[6, 1, 5]);
        assert_eq!(a.symbols.len(), 30);
        assert_eq!(a.messages.len(), 30);
        let c = Batch::generate(&setup, &[0.1, 0.2], 3, 9, Domain::TrainCnn, 5);
        assert_ne!(a.symbols, c.symbols);
    }

    #[test]
    fn eb_n0_uses_code_rate() {
        let setup = FrameSetup::awgn(PolarCode::default_16_8());
        let es = setup.sigma(3.0, SnrConvention::EsN0).unwrap();
        let eb = setup.sigma(3.0, SnrConvention::EbN0).unwrap();
        assert!((eb / es - 2f64.sqrt()).abs() < 1e-12);
    }
}

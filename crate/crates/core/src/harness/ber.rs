//! Monte-Carlo bit-error-rate evaluation.

use crate::channel::{transmit_symbols, ChannelSpec, Framing, SnrConvention};
use crate::classic::{bcjr_equalize, ls_channel_estimate, PilotRecord, Trellis};
use crate::error::{Error, Result};
use crate::models::{leading, threshold_bits, FrameSetup};
use crate::nn::{Network, Tensor};
use crate::par::{map_chunks, Execution};
use crate::rng::{self, Domain};

use rand::Rng;

const Z95: f64 = 1.959_963_984_540_054;

/// Frames handed to one worker at a time.
const CHUNK_FRAMES: usize = 500;

/// Monte-Carlo tally at one SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerRecord {
    pub snr_db: f64,
    pub convention: SnrConvention,
    pub bits_tested: u64,
    pub bit_errors: u64,
    pub ber: f64,
    /// Half-width of the Wilson 95% interval.
    pub ci: f64,
}

impl BerRecord {
    pub fn new(snr_db: f64, convention: SnrConvention, bits_tested: u64, bit_errors: u64) -> Self {
        let ber = if bits_tested == 0 {
            0.0
        } else {
            bit_errors as f64 / bits_tested as f64
        };
        let (lo, hi) = wilson_interval(bit_errors, bits_tested);
        BerRecord {
            snr_db,
            convention,
            bits_tested,
            bit_errors,
            ber,
            ci: (hi - lo) / 2.0,
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        wilson_interval(self.bit_errors, self.bits_tested)
    }
}

/// Wilson score interval at 95% for `errors` out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Channel knowledge given to the BCJR receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Csi {
    /// True taps, nonlinearity and noise level.
    Perfect,
    /// Taps from a least-squares fit to a fresh pilot of this length per frame.
    /// The nonlinearity and noise level are known.
    Estimated { pilot_len: usize },
}

/// A receiver under test.
#[derive(Debug, Clone, Copy)]
pub enum Receiver<'a> {
    /// Sign of the received samples.
    Sign,
    Cnn(&'a Network),
    Bcjr(Csi),
    /// Equalizer followed by the neural decoder.
    CnnNnd {
        cnn: &'a Network,
        nnd: &'a Network,
    },
    /// Equalizer followed by SC decoding on `2y/σ²` LLRs.
    CnnSc(&'a Network),
    /// Neural decoder fed the received samples directly.
    Nnd(&'a Network),
}

impl Receiver<'_> {
    /// Whether errors are counted on message bits rather than channel symbols.
    pub fn counts_message_bits(&self) -> bool {
        matches!(self, Receiver::CnnNnd { .. } | Receiver::CnnSc(_) | Receiver::Nnd(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Receiver::Sign => "sign",
            Receiver::Cnn(_) => "cnn",
            Receiver::Bcjr(Csi::Perfect) => "bcjr_perfect_csi",
            Receiver::Bcjr(Csi::Estimated { .. }) => "bcjr_estimated_csi",
            Receiver::CnnNnd { .. } => "cnn_nnd",
            Receiver::CnnSc(_) => "cnn_sc",
            Receiver::Nnd(_) => "nnd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub snr_db: f64,
    pub sigma: f64,
}

/// SNR points, frame count and seed for an evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPlan {
    pub points: Vec<EvalPoint>,
    pub convention: SnrConvention,
    pub frames_per_snr: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl EvalPlan {
    pub fn new(
        setup: &FrameSetup,
        snr_db: &[f64],
        convention: SnrConvention,
        frames_per_snr: usize,
        seed: u64,
    ) -> Result<Self> {
        let points = snr_db
            .iter()
            .map(|&db| {
                Ok(EvalPoint {
                    snr_db: db,
                    sigma: setup.sigma(db, convention)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(EvalPlan {
            points,
            convention,
            frames_per_snr,
            seed,
            exec: Execution::default(),
        })
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }
}

/// Per-SNR bit error rate of `receiver` on frames drawn from `setup`.
///
/// Frame `f` at grid index `i` always uses stream `(seed, i, f)`, so totals
/// do not depend on the execution mode, and different receivers evaluated
/// with the same plan see the same frames.
pub fn evaluate_ber(receiver: Receiver<'_>, setup: &FrameSetup, plan: &EvalPlan) -> Result<Vec<BerRecord>> {
    if plan.frames_per_snr == 0 {
        return Err(Error::contract("evaluation needs at least one frame per SNR"));
    }
    setup.validate()?;
    if matches!(
        receiver,
        Receiver::CnnNnd { .. } | Receiver::CnnSc(_) | Receiver::Nnd(_)
    ) && setup.code.is_none()
    {
        return Err(Error::InvalidSpec(format!("{} needs coded frames", receiver.name())));
    }
    let bits_per_frame = if receiver.counts_message_bits() {
        setup.message_bits()
    } else {
        setup.symbols_per_frame()
    } as u64;
    plan.points
        .iter()
        .enumerate()
        .map(|(i, point)| {
            let counts = map_chunks(plan.exec, plan.frames_per_snr, CHUNK_FRAMES, |range| {
                count_errors(receiver, setup, plan.seed, i as u64, point.sigma, range)
            });
            let errors = counts.into_iter().sum::<Result<u64>>()?;
            Ok(BerRecord::new(
                point.snr_db,
                plan.convention,
                bits_per_frame * plan.frames_per_snr as u64,
                errors,
            ))
        })
        .collect()
}

fn count_errors(
    receiver: Receiver<'_>,
    setup: &FrameSetup,
    seed: u64,
    snr_index: u64,
    sigma: f64,
    frames: std::ops::Range<usize>,
) -> Result<u64> {
    let n = setup.symbols_per_frame();
    let len = setup.received_len();
    let count = frames.len();
    let mut messages = Vec::with_capacity(count);
    let mut symbols = Vec::with_capacity(count * n);
    let mut received = Vec::with_capacity(count * len);
    for f in frames.clone() {
        let mut rng = rng::stream(seed, Domain::Eval, snr_index, f as u64);
        let frame = setup.generate(sigma, &mut rng);
        messages.push(frame.message);
        symbols.extend_from_slice(&frame.symbols);
        received.extend_from_slice(&frame.received);
    }
    let symbol_errors = |decisions: &[f64]| -> u64 {
        decisions
            .iter()
            .zip(&symbols)
            .filter(|(y, s)| (**y >= 0.0) != (**s > 0.0))
            .count() as u64
    };
    let message_errors = |decoded: &[Vec<u8>]| -> u64 {
        decoded
            .iter()
            .zip(&messages)
            .map(|(d, m)| d.iter().zip(m).filter(|(a, b)| a != b).count() as u64)
            .sum()
    };
    let equalized = |cnn: &Network| -> Result<Vec<f64>> {
        let out = cnn.forward(&Tensor::new(vec![count, 1, len], received.clone())?)?;
        Ok(leading(&out, n))
    };

    match receiver {
        Receiver::Sign => {
            let first: Vec<f64> = received
                .chunks_exact(len)
                .flat_map(|r| r[..n].iter().copied())
                .collect();
            Ok(symbol_errors(&first))
        }
        Receiver::Cnn(cnn) => Ok(symbol_errors(&equalized(cnn)?)),
        Receiver::Bcjr(csi) => {
            let mut decisions = Vec::with_capacity(count * n);
            let bcjr_sigma = sigma.max(1e-9);
            let perfect = Trellis::from_channel(&setup.channel)?;
            for (f, r) in frames.zip(received.chunks_exact(len)) {
                let trellis = match csi {
                    Csi::Perfect => perfect.clone(),
                    Csi::Estimated { pilot_len } => {
                        let mut rng = rng::stream(seed, Domain::Pilot, snr_index, f as u64);
                        let taps = estimate_taps(&setup.channel, sigma, pilot_len, &mut rng)?;
                        Trellis::new(&taps, setup.channel.nonlinearity)?
                    }
                };
                let p = bcjr_equalize(&trellis, r, bcjr_sigma, setup.framing)?;
                decisions.extend(p.iter().map(|&p| if p >= 0.5 { 1.0 } else { -1.0 }));
            }
            Ok(symbol_errors(&decisions))
        }
        Receiver::CnnNnd { cnn, nnd } => {
            let soft = Tensor::new(vec![count, n], equalized(cnn)?)?;
            let probs = nnd.forward(&soft)?;
            let decoded: Vec<Vec<u8>> = probs
                .data()
                .chunks_exact(setup.message_bits())
                .map(threshold_bits)
                .collect();
            Ok(message_errors(&decoded))
        }
        Receiver::CnnSc(cnn) => {
            let code = setup.code.as_ref().expect("checked by caller");
            let scale = 2.0 / (sigma * sigma).max(1e-12);
            let decoded = equalized(cnn)?
                .chunks_exact(n)
                .map(|y| {
                    let llrs: Vec<f64> = y.iter().map(|v| (scale * v).clamp(-50.0, 50.0)).collect();
                    code.sc_decode(&llrs)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(message_errors(&decoded))
        }
        Receiver::Nnd(nnd) => {
            let first: Vec<f64> = received
                .chunks_exact(len)
                .flat_map(|r| r[..n].iter().copied())
                .collect();
            let probs = nnd.forward(&Tensor::new(vec![count, n], first)?)?;
            let decoded: Vec<Vec<u8>> = probs
                .data()
                .chunks_exact(setup.message_bits())
                .map(threshold_bits)
                .collect();
            Ok(message_errors(&decoded))
        }
    }
}

/// Sends a random pilot through the channel and fits its taps.
pub fn estimate_taps<R: Rng + ?Sized>(
    channel: &ChannelSpec,
    sigma: f64,
    pilot_len: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let symbols: Vec<f64> = (0..pilot_len)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let received = transmit_symbols(&symbols, &channel.with_sigma(sigma), Framing::Truncated, rng);
    ls_channel_estimate(&PilotRecord::new(symbols, received)?, channel.taps.len())
}

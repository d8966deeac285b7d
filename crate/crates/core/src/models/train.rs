//! CNN-only, NND-only and joint training loops.

use crate::channel::SnrConvention;
use crate::error::{Error, Result};
use crate::nn::{bce_loss, mse_loss, Init, Network, Tensor};
use crate::polar::PolarCode;
use crate::rng::Domain;

use super::data::{Batch, FrameSetup};
use super::spec::{build_cnn_equalizer, build_nnd, NetworkSpec};

/// Mini-batch schedule. One batch holds `frames_per_snr` frames at every
/// grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub snr_grid: Vec<f64>,
    pub convention: SnrConvention,
    pub frames_per_snr: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub init: Init,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            snr_grid: (0..12).map(f64::from).collect(),
            convention: SnrConvention::EsN0,
            frames_per_snr: 20,
            iterations: 5000,
            learning_rate: 0.001,
            seed: 0,
            init: Init::He,
        }
    }
}

impl TrainingConfig {
    pub fn batch_size(&self) -> usize {
        self.frames_per_snr * self.snr_grid.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_grid.is_empty() || self.snr_grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec(
                "training SNR grid must be non-empty and finite".into(),
            ));
        }
        if self.frames_per_snr == 0 {
            return Err(Error::InvalidSpec("need at least one frame per SNR".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidSpec(format!("bad learning rate {}", self.learning_rate)));
        }
        Ok(())
    }

    fn sigmas(&self, setup: &FrameSetup) -> Result<Vec<f64>> {
        self.snr_grid
            .iter()
            .map(|&db| setup.sigma(db, self.convention))
            .collect()
    }
}

/// A trained network and its per-iteration training loss.
#[derive(Debug, Clone)]
pub struct TrainedNetwork {
    pub network: Network,
    pub loss_trace: Vec<f64>,
}

/// Loss components of one joint fine-tuning step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLoss {
    pub mse: f64,
    pub bce: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointOptions {
    pub iterations: usize,
    pub learning_rate: f64,
    /// Only the decoder is updated when set.
    pub freeze_cnn: bool,
}

impl Default for JointOptions {
    fn default() -> Self {
        JointOptions {
            iterations: 2000,
            learning_rate: 0.0005,
            freeze_cnn: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct JointResult {
    pub cnn: Network,
    pub nnd: Network,
    pub trace: Vec<JointLoss>,
}

fn check_loss(iteration: usize, loss: f64) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::Divergence { iteration, loss })
    }
}

fn diverged(iteration: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite(_) => Error::Divergence {
            iteration,
            loss: f64::NAN,
        },
        other => other,
    }
}

/// MSE between the first `n` outputs of each frame and the sent symbols.
/// The gradient is zero on any trailing positions.
pub(crate) fn symbol_mse(out: &Tensor, symbols: &[f64], n: usize) -> Result<(f64, Tensor)> {
    let len = *out.shape().last().expect("rank >= 1");
    let pred = leading(out, n);
    let (loss, g) = mse_loss(&pred, symbols)?;
    let mut grad = vec![0.0; out.len()];
    for (row, gr) in grad.chunks_exact_mut(len).zip(g.chunks_exact(n)) {
        row[..n].copy_from_slice(gr);
    }
    Ok((loss, Tensor::new(out.shape().to_vec(), grad)?))
}

/// First `n` values of each row of a `[B, 1, len]` output.
pub(crate) fn leading(out: &Tensor, n: usize) -> Vec<f64> {
    let len = *out.shape().last().expect("rank >= 1");
    out.data()
        .chunks_exact(len)
        .flat_map(|row| row[..n].iter().copied())
        .collect()
}

/// Trains a fresh CNN to regress the sent symbols from the received samples.
pub fn train_cnn_equalizer(spec: &NetworkSpec, config: &TrainingConfig, setup: &FrameSetup) -> Result<TrainedNetwork> {
    let mut cnn = build_cnn_equalizer(spec)?;
    cnn.init(config.seed, config.init);
    continue_cnn_training(cnn, config, setup)
}

/// Runs the CNN training loop starting from the given parameters.
pub fn continue_cnn_training(mut cnn: Network, config: &TrainingConfig, setup: &FrameSetup) -> Result<TrainedNetwork> {
    config.validate()?;
    setup.validate()?;
    let sigmas = config.sigmas(setup)?;
    let n = setup.symbols_per_frame();
    let mut adam = cnn.optimizer(config.learning_rate);
    let mut trace = Vec::with_capacity(config.iterations);
    for it in 0..config.iterations {
        let batch = Batch::generate(
            setup,
            &sigmas,
            config.frames_per_snr,
            config.seed,
            Domain::TrainCnn,
            it as u64,
        );
        let out = cnn.forward_train(&batch.inputs).map_err(diverged(it))?;
        let (loss, grad) = symbol_mse(&out, &batch.symbols, n)?;
        trace.push(check_loss(it, loss)?);
        let grads = cnn.backward(&grad).map_err(diverged(it))?;
        cnn.apply(&mut adam, &grads)?;
    }
    Ok(TrainedNetwork {
        network: cnn,
        loss_trace: trace,
    })
}

/// Trains a fresh decoder on BPSK codewords over AWGN with BCE loss.
pub fn train_nnd_awgn(spec: &NetworkSpec, config: &TrainingConfig, code: &PolarCode) -> Result<TrainedNetwork> {
    config.validate()?;
    let mut nnd = build_nnd(spec)?;
    if spec.layer_sizes.first() != Some(&code.n()) || spec.layer_sizes.last() != Some(&code.k()) {
        return Err(Error::InvalidSpec(format!(
            "decoder {spec} does not map {} inputs to {} bits",
            code.n(),
            code.k()
        )));
    }
    nnd.init(config.seed, config.init);
    let setup = FrameSetup::awgn(code.clone());
    let sigmas = config.sigmas(&setup)?;
    let mut adam = nnd.optimizer(config.learning_rate);
    let mut trace = Vec::with_capacity(config.iterations);
    for it in 0..config.iterations {
        let batch = Batch::generate(
            &setup,
            &sigmas,
            config.frames_per_snr,
            config.seed,
            Domain::TrainNnd,
            it as u64,
        );
        let input = batch.inputs.reshape(vec![batch.frames, code.n()])?;
        let out = nnd.forward_train(&input).map_err(diverged(it))?;
        let (loss, g) = bce_loss(out.data(), &batch.messages)?;
        trace.push(check_loss(it, loss)?);
        let grads = nnd
            .backward(&Tensor::new(out.shape().to_vec(), g)?)
            .map_err(diverged(it))?;
        nnd.apply(&mut adam, &grads)?;
    }
    Ok(TrainedNetwork {
        network: nnd,
        loss_trace: trace,
    })
}

/// End-to-end fine-tuning of CNN → NND under MSE(symbols) + BCE(message).
pub fn joint_finetune(
    cnn: &Network,
    nnd: &Network,
    config: &TrainingConfig,
    options: &JointOptions,
    setup: &FrameSetup,
) -> Result<JointResult> {
    config.validate()?;
    setup.validate()?;
    if setup.code.is_none() {
        return Err(Error::InvalidSpec("joint training needs coded frames".into()));
    }
    let sigmas = config.sigmas(setup)?;
    let n = setup.symbols_per_frame();
    let mut cnn = cnn.clone();
    let mut nnd = nnd.clone();
    let mut cnn_adam = cnn.optimizer(options.learning_rate);
    let mut nnd_adam = nnd.optimizer(options.learning_rate);
    let mut trace = Vec::with_capacity(options.iterations);
    for it in 0..options.iterations {
        let batch = Batch::generate(
            setup,
            &sigmas,
            config.frames_per_snr,
            config.seed,
            Domain::TrainJoint,
            it as u64,
        );
        let out = if options.freeze_cnn {
            cnn.forward(&batch.inputs)
        } else {
            cnn.forward_train(&batch.inputs)
        }
        .map_err(diverged(it))?;
        let (mse, mse_grad) = symbol_mse(&out, &batch.symbols, n)?;
        let soft = Tensor::new(vec![batch.frames, n], leading(&out, n))?;
        let probs = nnd.forward_train(&soft).map_err(diverged(it))?;
        let (bce, g) = bce_loss(probs.data(), &batch.messages)?;
        let total = check_loss(it, mse + bce)?;
        trace.push(JointLoss { mse, bce, total });

        let nnd_grads = nnd
            .backward(&Tensor::new(probs.shape().to_vec(), g)?)
            .map_err(diverged(it))?;
        nnd.apply(&mut nnd_adam, &nnd_grads)?;
        if !options.freeze_cnn {
            let len = setup.received_len();
            let mut grad = mse_grad;
            for (row, gi) in grad
                .data_mut()
                .chunks_exact_mut(len)
                .zip(nnd_grads.input.data().chunks_exact(n))
            {
                for (r, g) in row[..n].iter_mut().zip(gi) {
                    *r += g;
                }
            }
            let cnn_grads = cnn.backward(&grad).map_err(diverged(it))?;
            cnn.apply(&mut cnn_adam, &cnn_grads)?;
        }
    }
    Ok(JointResult { cnn, nnd, trace })
}

//! Experiment drivers: structure sweep, decision boundary and full figure runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::models::{joint_finetune, train_cnn_equalizer, train_nnd_awgn, FrameSetup, NetworkSpec, TrainedNetwork};
use crate::nn::{checkpoint, Network, NetworkKind, Tensor};
use crate::par::Execution;

use super::ber::{evaluate_ber, BerRecord, Csi, EvalPlan, Receiver};
use super::config::{BoundaryGrid, ExperimentConfig, ExperimentId};
use super::output::{content_hash, curve_csv, sci, write_text, Manifest};
use super::reference::reference_curves;

/// A named BER curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub records: Vec<BerRecord>,
}

/// One trained and evaluated structure from a sweep.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub spec: NetworkSpec,
    pub trained: TrainedNetwork,
    pub records: Vec<BerRecord>,
}

/// File-name friendly structure label, e.g. `cnn_6_12_24_12_6_1`.
pub fn structure_label(spec: &NetworkSpec) -> String {
    let sizes: Vec<String> = spec.layer_sizes.iter().map(usize::to_string).collect();
    format!("{}_{}", spec.kind, sizes.join("_"))
}

fn eval_plan(cfg: &ExperimentConfig, setup: &FrameSetup, exec: Execution) -> Result<EvalPlan> {
    Ok(EvalPlan::new(
        setup,
        &cfg.test_snr,
        cfg.training.convention,
        cfg.test_frames_per_snr,
        cfg.seed,
    )?
    .with_exec(exec))
}

/// Perfect-CSI BCJR on long uncoded blocks carrying the same number of
/// symbols as the experiment's test set. Frame edges carry a known-zero
/// history, so long blocks give the steady-state detector error rate.
pub fn long_block_bcjr(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<BerRecord>> {
    let coded = cfg.frame_setup()?;
    let block = cfg.bcjr_block_length;
    let setup = FrameSetup::uncoded(cfg.channel.clone(), cfg.framing, block);
    let symbols = cfg.test_frames_per_snr * coded.symbols_per_frame();
    let frames = symbols.div_ceil(block);
    // Same noise level per SNR value as the coded frames.
    let mut plan = EvalPlan::new(&coded, &cfg.test_snr, cfg.training.convention, frames, cfg.seed)?.with_exec(exec);
    plan.seed = cfg.seed ^ 0x5eed_b10c;
    evaluate_ber(Receiver::Bcjr(Csi::Perfect), &setup, &plan)
}

/// Trains every structure of the sweep with the same seed and schedule and
/// evaluates each on the experiment channel.
pub fn run_structure_sweep(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<SweepResult>> {
    let specs = if cfg.sweep.is_empty() {
        vec![cfg.cnn.clone()]
    } else {
        cfg.sweep.clone()
    };
    let setup = cfg.frame_setup()?;
    let plan = eval_plan(cfg, &setup, exec)?;
    specs
        .into_iter()
        .map(|spec| {
            let trained = train_cnn_equalizer(&spec, &cfg.training_config(), &setup)?;
            let records = evaluate_ber(Receiver::Cnn(&trained.network), &setup, &plan)?;
            Ok(SweepResult { spec, trained, records })
        })
        .collect()
}

/// One cell of the decision-boundary grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub r1: f64,
    pub r2: f64,
    /// Sign of the equalizer output at the first position, ±1.
    pub decision: i8,
}

/// Feeds every window `(r1, r2)` of the grid to the equalizer and records the
/// hard decision for the first symbol.
pub fn export_decision_boundary(cnn: &Network, grid: &BoundaryGrid) -> Result<Vec<BoundaryPoint>> {
    if cnn.kind() != NetworkKind::Cnn {
        return Err(Error::InvalidSpec("decision boundaries need a CNN equalizer".into()));
    }
    if cnn.flat_params().iter().all(|&p| p == 0.0) {
        return Err(Error::State("equalizer has not been initialized or trained"));
    }
    let axis = grid.axis()?;
    let mut windows = Vec::with_capacity(axis.len() * axis.len() * 2);
    for &r1 in &axis {
        for &r2 in &axis {
            windows.extend_from_slice(&[r1, r2]);
        }
    }
    let count = axis.len() * axis.len();
    let out = cnn.forward(&Tensor::new(vec![count, 1, 2], windows.clone())?)?;
    Ok(windows
        .chunks_exact(2)
        .zip(out.data().chunks_exact(2))
        .map(|(w, y)| BoundaryPoint {
            r1: w[0],
            r2: w[1],
            decision: if y[0] >= 0.0 { 1 } else { -1 },
        })
        .collect())
}

/// Grid CSV with columns `r1,r2,decision`.
pub fn boundary_csv(points: &[BoundaryPoint]) -> String {
    let mut out = String::from("r1,r2,decision\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", sci(p.r1), sci(p.r2), p.decision);
    }
    out
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub dir: PathBuf,
    pub curves: Vec<Curve>,
    pub files: Vec<PathBuf>,
    pub manifest: Manifest,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
    curves: Vec<Curve>,
}

impl Writer {
    fn curve(&mut self, name: &str, records: Vec<BerRecord>) -> Result<()> {
        let path = self.dir.join(format!("{name}.csv"));
        write_text(&path, &curve_csv(&records))?;
        self.files.push(path);
        self.curves.push(Curve {
            name: name.to_string(),
            records,
        });
        Ok(())
    }

    /// Transcribed curve, written with a zero interval.
    fn reference(&mut self, figure: &str, curve: &str, cfg: &ExperimentConfig) -> Result<()> {
        let reference = reference_curves()?
            .into_iter()
            .find(|c| c.figure == figure && c.curve == curve)
            .ok_or_else(|| Error::Parse(format!("missing reference curve {figure}/{curve}")))?;
        let records: Vec<BerRecord> = reference
            .points
            .iter()
            .map(|&(snr, ber)| BerRecord {
                snr_db: snr,
                convention: cfg.training.convention,
                bits_tested: 0,
                bit_errors: 0,
                ber,
                ci: 0.0,
            })
            .collect();
        let path = self.dir.join(format!("reference_{curve}.csv"));
        write_text(&path, &curve_csv(&records))?;
        self.files.push(path);
        Ok(())
    }

    fn checkpoint(&mut self, name: &str, net: &Network) -> Result<()> {
        let path = self.dir.join(format!("{name}.ckpt"));
        checkpoint::save(net, &path)?;
        self.files.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_text(&path, text)?;
        self.files.push(path);
        Ok(())
    }
}

/// Runs the configured experiment and writes curves, checkpoints and a
/// manifest under `out_dir/<experiment id>/`. `progress` receives one line
/// per stage.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    exec: Execution,
    progress: &mut dyn FnMut(&str),
) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let mut w = Writer {
        dir: out_dir.join(cfg.experiment.name()),
        files: Vec::new(),
        curves: Vec::new(),
    };
    let mut manifest = Manifest::new();
    let config_text = cfg.to_text();
    manifest.push("experiment", cfg.experiment);
    manifest.push("seed", cfg.seed);
    manifest.push("config_hash", content_hash(config_text.as_bytes()));
    for (k, v) in cfg.to_pairs() {
        manifest.push(format!("config.{k}"), v);
    }
    if cfg.coded {
        manifest.push("info_set", format!("{:?}", cfg.code()?.info_set()));
    }
    w.text("config.txt", &config_text)?;

    let setup = cfg.frame_setup()?;
    let plan = eval_plan(cfg, &setup, exec)?;
    let train_cfg = cfg.training_config();

    match cfg.experiment {
        ExperimentId::Fig2Sweep => {
            for r in run_structure_sweep(cfg, exec)? {
                let label = structure_label(&r.spec);
                progress(&format!(
                    "trained {label} ({} parameters)",
                    r.trained.network.param_count()
                ));
                manifest.push(format!("params.{label}"), r.trained.network.param_count());
                manifest.push(format!("final_loss.{label}"), last(&r.trained.loss_trace));
                w.checkpoint(&label, &r.trained.network)?;
                w.curve(&label, r.records)?;
            }
            for c in reference_curves()?.iter().filter(|c| c.figure == "fig2") {
                w.reference("fig2", &c.curve, cfg)?;
            }
        }
        ExperimentId::Fig3Linear | ExperimentId::Fig5Nonlinear => {
            let cnn = train_cnn_equalizer(&cfg.cnn, &train_cfg, &setup)?;
            progress(&format!("trained cnn, final loss {}", last(&cnn.loss_trace)));
            manifest.push("final_loss.cnn", last(&cnn.loss_trace));
            w.checkpoint("cnn", &cnn.network)?;
            w.curve("cnn", evaluate_ber(Receiver::Cnn(&cnn.network), &setup, &plan)?)?;
            progress("evaluated cnn");
            w.curve(
                "bcjr_perfect_csi",
                evaluate_ber(Receiver::Bcjr(Csi::Perfect), &setup, &plan)?,
            )?;
            progress("evaluated perfect-CSI BCJR");
            w.curve("bcjr_perfect_csi_long", long_block_bcjr(cfg, exec)?)?;
            progress(&format!(
                "evaluated perfect-CSI BCJR on {}-symbol blocks",
                cfg.bcjr_block_length
            ));
            if cfg.experiment == ExperimentId::Fig3Linear {
                for &pilot_len in &cfg.pilot_lengths {
                    let rx = Receiver::Bcjr(Csi::Estimated { pilot_len });
                    w.curve(
                        &format!("bcjr_estimated_n{pilot_len}"),
                        evaluate_ber(rx, &setup, &plan)?,
                    )?;
                    progress(&format!("evaluated estimated-CSI BCJR, n = {pilot_len}"));
                }
                for name in [
                    "perfect_csi",
                    "ml_bcjr_n10",
                    "ml_bcjr_n20",
                    "bayesian_n10",
                    "bayesian_n20",
                ] {
                    w.reference("fig3", name, cfg)?;
                }
            } else {
                w.reference("fig5", "svm", cfg)?;
                w.reference("fig5", "gpc", cfg)?;
            }
        }
        ExperimentId::Fig6Joint => {
            let code = cfg.code()?;
            let cnn = train_cnn_equalizer(&cfg.cnn, &train_cfg, &setup)?;
            progress(&format!("trained cnn, final loss {}", last(&cnn.loss_trace)));
            let nnd = train_nnd_awgn(&cfg.nnd, &cfg.nnd_training_config(), &code)?;
            progress(&format!("trained nnd, final loss {}", last(&nnd.loss_trace)));
            manifest.push("final_loss.cnn", last(&cnn.loss_trace));
            manifest.push("final_loss.nnd", last(&nnd.loss_trace));
            w.checkpoint("cnn", &cnn.network)?;
            w.checkpoint("nnd", &nnd.network)?;
            let cascade = Receiver::CnnNnd {
                cnn: &cnn.network,
                nnd: &nnd.network,
            };
            w.curve("cnn_nnd", evaluate_ber(cascade, &setup, &plan)?)?;
            w.curve("cnn_sc", evaluate_ber(Receiver::CnnSc(&cnn.network), &setup, &plan)?)?;
            progress("evaluated cascade");
            let joint = joint_finetune(&cnn.network, &nnd.network, &train_cfg, &cfg.joint, &setup)?;
            let final_joint = joint.trace.last().map_or(f64::NAN, |l| l.total);
            progress(&format!("joint fine-tuning done, final loss {final_joint}"));
            manifest.push("final_loss.joint", final_joint);
            w.checkpoint("cnn_joint", &joint.cnn)?;
            w.checkpoint("nnd_joint", &joint.nnd)?;
            let rx = Receiver::CnnNnd {
                cnn: &joint.cnn,
                nnd: &joint.nnd,
            };
            w.curve("cnn_nnd_joint", evaluate_ber(rx, &setup, &plan)?)?;
            w.reference("fig6", "gpc_sc", cfg)?;
            w.reference("fig6", "dl", cfg)?;
        }
        ExperimentId::Boundary => {
            let cnn = train_cnn_equalizer(&cfg.cnn, &train_cfg, &setup)?;
            progress(&format!("trained cnn, final loss {}", last(&cnn.loss_trace)));
            manifest.push("final_loss.cnn", last(&cnn.loss_trace));
            w.checkpoint("cnn", &cnn.network)?;
            let points = export_decision_boundary(&cnn.network, &cfg.boundary_grid)?;
            manifest.push("boundary.points", points.len());
            w.text("decision_boundary.csv", &boundary_csv(&points))?;
            w.curve("cnn", evaluate_ber(Receiver::Cnn(&cnn.network), &setup, &plan)?)?;
        }
    }

    for c in &w.curves {
        for r in &c.records {
            manifest.push(format!("ber.{}.{}", c.name, r.snr_db), sci(r.ber));
        }
    }
    manifest.push("wall_time_s", format!("{:.3}", start.elapsed().as_secs_f64()));
    let manifest_path = w.dir.join("manifest.txt");
    manifest.write(&manifest_path)?;
    w.files.push(manifest_path);
    Ok(ExperimentOutput {
        dir: w.dir,
        curves: w.curves,
        files: w.files,
        manifest,
    })
}

fn last(trace: &[f64]) -> f64 {
    trace.last().copied().unwrap_or(f64::NAN)
}

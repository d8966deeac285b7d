use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use nneq::harness::{
    self, boundary_csv, content_hash, curve_csv, estimate_taps, evaluate_ber, export_decision_boundary, run_experiment,
    run_structure_sweep, structure_label, write_text, Csi, EvalPlan, ExperimentConfig, ExperimentId, Manifest,
    Receiver,
};
use nneq::models::{joint_finetune, train_cnn_equalizer, train_nnd_awgn};
use nneq::nn::checkpoint;
use nneq::par::Execution;
use nneq::rng::{self, Domain};

#[derive(Parser)]
#[command(name = "nneq", version, about = "CNN equalizer and neural polar decoder experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment preset used when no config file is given.
    #[arg(long)]
    experiment: Option<String>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for Monte-Carlo evaluation; 1 runs serially.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    /// Extra `key=value` settings applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the CNN equalizer on the configured channel.
    TrainCnn(Common),
    /// Train the neural decoder over AWGN.
    TrainNnd(Common),
    /// Jointly fine-tune a trained equalizer and decoder.
    FinetuneJoint {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cnn: PathBuf,
        #[arg(long)]
        nnd: PathBuf,
    },
    /// Monte-Carlo BER of a receiver over the test SNR grid.
    EvalBer {
        #[command(flatten)]
        common: Common,
        /// sign, cnn, cnn-nnd, cnn-sc, nnd, bcjr
        #[arg(long, default_value = "cnn")]
        receiver: String,
        #[arg(long)]
        cnn: Option<PathBuf>,
        #[arg(long)]
        nnd: Option<PathBuf>,
        /// Pilot length for estimated-CSI BCJR; perfect CSI when absent.
        #[arg(long)]
        pilot_len: Option<usize>,
    },
    /// Train and evaluate every structure of the sweep.
    SweepStructures(Common),
    /// Export the decision-boundary grid of an equalizer.
    Boundary {
        #[command(flatten)]
        common: Common,
        /// Trained equalizer; a new one is trained when absent.
        #[arg(long)]
        cnn: Option<PathBuf>,
    },
    /// BCJR baseline with perfect or estimated channel knowledge.
    BaselineMap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pilot_len: Option<usize>,
    },
    /// Least-squares tap estimates from random pilots at one SNR.
    EstimateChannel {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        pilot_len: usize,
        #[arg(long, default_value_t = 8.0)]
        snr_db: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Run a full figure experiment.
    RunExperiment(Common),
}

fn load_config(common: &Common, default: ExperimentId) -> Result<ExperimentConfig> {
    let mut cfg = match (&common.config, &common.experiment) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_text(&text).with_context(|| format!("in {}", path.display()))?
        }
        (None, Some(id)) => ExperimentConfig::preset(ExperimentId::parse(id)?),
        (None, None) => ExperimentConfig::preset(default),
    };
    if let (Some(_), Some(id)) = (&common.config, &common.experiment) {
        cfg.set("experiment", id)?;
    }
    for o in &common.overrides {
        let Some((k, v)) = o.split_once('=') else {
            bail!("--set expects KEY=VALUE, got `{o}`");
        };
        cfg.set(k.trim(), v.trim()).with_context(|| format!("--set {o}"))?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execution(common: &Common) -> Result<Execution> {
    match common.threads {
        Some(1) => Ok(Execution::Serial),
        Some(n) => {
            init_pool(n)?;
            Ok(Execution::Parallel)
        }
        None => Ok(Execution::Parallel),
    }
}

#[cfg(feature = "parallel")]
fn init_pool(n: u32) -> Result<()> {
    rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global()?;
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn init_pool(_n: u32) -> Result<()> {
    eprintln!("built without the `parallel` feature; running serially");
    Ok(())
}

fn base_manifest(cfg: &ExperimentConfig, command: &str) -> Manifest {
    let mut m = Manifest::new();
    m.push("command", command);
    m.push("seed", cfg.seed);
    m.push("config_hash", content_hash(cfg.to_text().as_bytes()));
    for (k, v) in cfg.to_pairs() {
        m.push(format!("config.{k}"), v);
    }
    m
}

fn finish(mut manifest: Manifest, dir: &Path, start: Instant) -> Result<()> {
    manifest.push("wall_time_s", format!("{:.3}", start.elapsed().as_secs_f64()));
    manifest.write(&dir.join("manifest.txt"))?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn trace_csv(trace: &[f64]) -> String {
    let mut s = String::from("iteration,loss\n");
    for (i, l) in trace.iter().enumerate() {
        s.push_str(&format!("{i},{}\n", harness::sci(*l)));
    }
    s
}

fn log(line: &str) {
    eprintln!("{line}");
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let start = Instant::now();
    match cli.command {
        Command::TrainCnn(common) => {
            let cfg = load_config(&common, ExperimentId::Fig3Linear)?;
            let dir = common.out.join("train_cnn");
            let trained = train_cnn_equalizer(&cfg.cnn, &cfg.training_config(), &cfg.frame_setup()?)?;
            checkpoint::save(&trained.network, &dir.join("cnn.ckpt"))?;
            write_text(&dir.join("loss.csv"), &trace_csv(&trained.loss_trace))?;
            let mut m = base_manifest(&cfg, "train-cnn");
            m.push("params", trained.network.param_count());
            m.push("final_loss", trained.loss_trace.last().copied().unwrap_or(f64::NAN));
            finish(m, &dir, start)
        }
        Command::TrainNnd(common) => {
            let cfg = load_config(&common, ExperimentId::Fig6Joint)?;
            let dir = common.out.join("train_nnd");
            let code = cfg.code()?;
            println!("info_set = {:?}", code.info_set());
            let trained = train_nnd_awgn(&cfg.nnd, &cfg.nnd_training_config(), &code)?;
            checkpoint::save(&trained.network, &dir.join("nnd.ckpt"))?;
            write_text(&dir.join("loss.csv"), &trace_csv(&trained.loss_trace))?;
            let mut m = base_manifest(&cfg, "train-nnd");
            m.push("info_set", format!("{:?}", code.info_set()));
            m.push("final_loss", trained.loss_trace.last().copied().unwrap_or(f64::NAN));
            finish(m, &dir, start)
        }
        Command::FinetuneJoint { common, cnn, nnd } => {
            let cfg = load_config(&common, ExperimentId::Fig6Joint)?;
            let dir = common.out.join("finetune_joint");
            let cnn = checkpoint::load(&cnn)?;
            let nnd = checkpoint::load(&nnd)?;
            let out = joint_finetune(&cnn, &nnd, &cfg.training_config(), &cfg.joint, &cfg.frame_setup()?)?;
            checkpoint::save(&out.cnn, &dir.join("cnn_joint.ckpt"))?;
            checkpoint::save(&out.nnd, &dir.join("nnd_joint.ckpt"))?;
            let mut m = base_manifest(&cfg, "finetune-joint");
            if let Some(l) = out.trace.last() {
                m.push("final_mse", l.mse);
                m.push("final_bce", l.bce);
                m.push("final_loss", l.total);
            }
            finish(m, &dir, start)
        }
        Command::EvalBer {
            common,
            receiver,
            cnn,
            nnd,
            pilot_len,
        } => {
            let cfg = load_config(&common, ExperimentId::Fig3Linear)?;
            let exec = execution(&common)?;
            let setup = cfg.frame_setup()?;
            let plan = EvalPlan::new(
                &setup,
                &cfg.test_snr,
                cfg.training.convention,
                cfg.test_frames_per_snr,
                cfg.seed,
            )?
            .with_exec(exec);
            let load = |p: &Option<PathBuf>, what: &str| -> Result<nneq::nn::Network> {
                let p = p
                    .as_ref()
                    .with_context(|| format!("receiver `{receiver}` needs --{what}"))?;
                Ok(checkpoint::load(p)?)
            };
            let (cnn_net, nnd_net);
            let rx = match receiver.as_str() {
                "sign" => Receiver::Sign,
                "bcjr" => Receiver::Bcjr(pilot_len.map_or(Csi::Perfect, |n| Csi::Estimated { pilot_len: n })),
                "cnn" => {
                    cnn_net = load(&cnn, "cnn")?;
                    Receiver::Cnn(&cnn_net)
                }
                "cnn-sc" => {
                    cnn_net = load(&cnn, "cnn")?;
                    Receiver::CnnSc(&cnn_net)
                }
                "nnd" => {
                    nnd_net = load(&nnd, "nnd")?;
                    Receiver::Nnd(&nnd_net)
                }
                "cnn-nnd" => {
                    cnn_net = load(&cnn, "cnn")?;
                    nnd_net = load(&nnd, "nnd")?;
                    Receiver::CnnNnd {
                        cnn: &cnn_net,
                        nnd: &nnd_net,
                    }
                }
                other => bail!("unknown receiver `{other}`"),
            };
            let records = evaluate_ber(rx, &setup, &plan)?;
            let dir = common.out.join("eval_ber");
            write_text(&dir.join(format!("{}.csv", rx.name())), &curve_csv(&records))?;
            print!("{}", curve_csv(&records));
            finish(base_manifest(&cfg, "eval-ber"), &dir, start)
        }
        Command::SweepStructures(common) => {
            let cfg = load_config(&common, ExperimentId::Fig2Sweep)?;
            let exec = execution(&common)?;
            let dir = common.out.join("sweep_structures");
            let mut m = base_manifest(&cfg, "sweep-structures");
            for r in run_structure_sweep(&cfg, exec)? {
                let label = structure_label(&r.spec);
                log(&format!("{label}: {} parameters", r.trained.network.param_count()));
                checkpoint::save(&r.trained.network, &dir.join(format!("{label}.ckpt")))?;
                write_text(&dir.join(format!("{label}.csv")), &curve_csv(&r.records))?;
                m.push(format!("params.{label}"), r.trained.network.param_count());
            }
            finish(m, &dir, start)
        }
        Command::Boundary { common, cnn } => {
            let cfg = load_config(&common, ExperimentId::Boundary)?;
            let dir = common.out.join("boundary");
            let net = match cnn {
                Some(p) => checkpoint::load(&p)?,
                None => {
                    let t = train_cnn_equalizer(&cfg.cnn, &cfg.training_config(), &cfg.frame_setup()?)?;
                    checkpoint::save(&t.network, &dir.join("cnn.ckpt"))?;
                    t.network
                }
            };
            let points = export_decision_boundary(&net, &cfg.boundary_grid)?;
            write_text(&dir.join("decision_boundary.csv"), &boundary_csv(&points))?;
            let mut m = base_manifest(&cfg, "boundary");
            m.push("points", points.len());
            finish(m, &dir, start)
        }
        Command::BaselineMap { common, pilot_len } => {
            let cfg = load_config(&common, ExperimentId::Fig3Linear)?;
            let exec = execution(&common)?;
            let setup = cfg.frame_setup()?;
            let plan = EvalPlan::new(
                &setup,
                &cfg.test_snr,
                cfg.training.convention,
                cfg.test_frames_per_snr,
                cfg.seed,
            )?
            .with_exec(exec);
            let csi = pilot_len.map_or(Csi::Perfect, |n| Csi::Estimated { pilot_len: n });
            let records = nneq::classic::map_ber_baseline(&setup, csi, &plan)?;
            let name = match csi {
                Csi::Perfect => "bcjr_perfect_csi".to_string(),
                Csi::Estimated { pilot_len } => format!("bcjr_estimated_n{pilot_len}"),
            };
            let dir = common.out.join("baseline_map");
            write_text(&dir.join(format!("{name}.csv")), &curve_csv(&records))?;
            print!("{}", curve_csv(&records));
            finish(base_manifest(&cfg, "baseline-map"), &dir, start)
        }
        Command::EstimateChannel {
            common,
            pilot_len,
            snr_db,
            trials,
        } => {
            let cfg = load_config(&common, ExperimentId::Fig3Linear)?;
            let setup = cfg.frame_setup()?;
            let sigma = setup.sigma(snr_db, cfg.training.convention)?;
            let taps = cfg.channel.taps.len();
            let mut mean = vec![0.0; taps];
            let mut mse = 0.0;
            for t in 0..trials {
                let mut rng = rng::stream(cfg.seed, Domain::Pilot, 0, t as u64);
                let h = estimate_taps(&cfg.channel, sigma, pilot_len, &mut rng)?;
                for (m, (e, h0)) in mean.iter_mut().zip(h.iter().zip(&cfg.channel.taps)) {
                    *m += e / trials as f64;
                    mse += (e - h0).powi(2) / (trials * taps) as f64;
                }
            }
            let dir = common.out.join("estimate_channel");
            let mut m = base_manifest(&cfg, "estimate-channel");
            m.push("pilot_len", pilot_len);
            m.push("snr_db", snr_db);
            m.push("trials", trials);
            m.push("true_taps", format!("{:?}", cfg.channel.taps));
            m.push("mean_estimate", format!("{mean:?}"));
            m.push("tap_mse", harness::sci(mse));
            print!("{}", m.render());
            finish(m, &dir, start)
        }
        Command::RunExperiment(common) => {
            let cfg = load_config(&common, ExperimentId::Fig3Linear)?;
            let exec = execution(&common)?;
            let out = run_experiment(&cfg, &common.out, exec, &mut log)?;
            for c in &out.curves {
                println!("{}:", c.name);
                for r in &c.records {
                    println!(
                        "  {:>5} dB  ber {}  ± {}",
                        r.snr_db,
                        harness::sci(r.ber),
                        harness::sci(r.ci)
                    );
                }
            }
            println!("wrote {}", out.dir.display());
            Ok(())
        }
    }
}

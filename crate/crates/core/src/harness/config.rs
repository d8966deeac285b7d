//! Experiment configuration: presets and the flat `key = value` file format.

use std::fmt;

use crate::channel::{ChannelSpec, Framing, Nonlinearity, SnrConvention, BOUNDARY_TAPS, LINEAR_TEST_TAPS};
use crate::error::{Error, Result};
use crate::models::{FrameSetup, JointOptions, NetworkSpec, TrainingConfig};
use crate::nn::{Init, NetworkKind};
use crate::polar::PolarCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    Fig2Sweep,
    Fig3Linear,
    Fig5Nonlinear,
    Fig6Joint,
    Boundary,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 5] = [
        ExperimentId::Fig2Sweep,
        ExperimentId::Fig3Linear,
        ExperimentId::Fig5Nonlinear,
        ExperimentId::Fig6Joint,
        ExperimentId::Boundary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Fig2Sweep => "fig2_sweep",
            ExperimentId::Fig3Linear => "fig3_linear",
            ExperimentId::Fig5Nonlinear => "fig5_nonlinear",
            ExperimentId::Fig6Joint => "fig6_joint",
            ExperimentId::Boundary => "boundary",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Grid for the decision-boundary export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for BoundaryGrid {
    fn default() -> Self {
        BoundaryGrid {
            min: -3.0,
            max: 3.0,
            step: 0.05,
        }
    }
}

impl BoundaryGrid {
    /// Grid coordinates along one axis, endpoints included.
    pub fn axis(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.max >= self.min && self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::InvalidSpec(format!("bad boundary grid {self:?}")));
        }
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| self.min + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    /// Taps and nonlinearity; the noise level comes from the SNR grids.
    pub channel: ChannelSpec,
    pub framing: Framing,
    pub coded: bool,
    pub uncoded_length: usize,
    pub code_n: usize,
    pub code_k: usize,
    pub design_z: f64,
    pub cnn: NetworkSpec,
    pub sweep: Vec<NetworkSpec>,
    pub nnd: NetworkSpec,
    pub training: TrainingConfig,
    pub nnd_iterations: usize,
    pub joint: JointOptions,
    pub test_snr: Vec<f64>,
    pub test_frames_per_snr: usize,
    pub pilot_lengths: Vec<usize>,
    /// Block length of the long-block BCJR reference curve.
    pub bcjr_block_length: usize,
    pub boundary_snr_db: f64,
    pub boundary_grid: BoundaryGrid,
}

fn int_range(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(f64::from).collect()
}

impl ExperimentConfig {
    /// Defaults for one experiment.
    pub fn preset(id: ExperimentId) -> Self {
        let linear = ChannelSpec::new(LINEAR_TEST_TAPS.to_vec(), Nonlinearity::Identity, 0.0).expect("valid");
        let nonlinear =
            ChannelSpec::new(LINEAR_TEST_TAPS.to_vec(), Nonlinearity::PolyCosMagnitude, 0.0).expect("valid");
        let base = ExperimentConfig {
            experiment: id,
            seed: 1,
            channel: linear,
            framing: Framing::Tail,
            coded: true,
            uncoded_length: 16,
            code_n: 16,
            code_k: 8,
            design_z: 0.5,
            cnn: NetworkSpec::default_cnn(),
            sweep: Vec::new(),
            nnd: NetworkSpec::default_nnd(),
            training: TrainingConfig::default(),
            nnd_iterations: 20_000,
            joint: JointOptions::default(),
            test_snr: int_range(0, 8),
            test_frames_per_snr: 50_000,
            pilot_lengths: vec![10, 20],
            bcjr_block_length: 1000,
            boundary_snr_db: 1.0,
            boundary_grid: BoundaryGrid::default(),
        };
        let eb_n0 = TrainingConfig {
            convention: SnrConvention::EbN0,
            ..TrainingConfig::default()
        };
        match id {
            ExperimentId::Fig2Sweep => ExperimentConfig {
                sweep: [
                    &[8, 16, 8, 1][..],
                    &[16, 32, 16, 1],
                    &[32, 64, 32, 1],
                    &[4, 8, 16, 8, 4, 1],
                    &[8, 16, 32, 16, 8, 1],
                    &[6, 12, 24, 12, 6, 1],
                ]
                .iter()
                .map(|f| NetworkSpec::cnn(f, 3))
                .collect(),
                ..base
            },
            ExperimentId::Fig3Linear => base,
            ExperimentId::Fig5Nonlinear => ExperimentConfig {
                channel: nonlinear,
                training: eb_n0,
                test_snr: int_range(2, 7),
                ..base
            },
            ExperimentId::Fig6Joint => ExperimentConfig {
                channel: nonlinear,
                training: eb_n0,
                test_snr: vec![1.0, 3.0, 5.0, 7.0, 9.0, 11.0],
                ..base
            },
            ExperimentId::Boundary => ExperimentConfig {
                channel: ChannelSpec::new(BOUNDARY_TAPS.to_vec(), Nonlinearity::Cubic, 0.0).expect("valid"),
                framing: Framing::Stream,
                coded: false,
                uncoded_length: 2,
                training: TrainingConfig {
                    snr_grid: vec![1.0],
                    frames_per_snr: 240,
                    ..TrainingConfig::default()
                },
                test_snr: vec![1.0],
                ..base
            },
        }
    }

    /// Preset selected by the file's `experiment` key (default `fig3_linear`),
    /// then every key applied in order.
    pub fn from_text(text: &str) -> Result<Self> {
        let entries = parse_flat(text)?;
        let id = entries
            .iter()
            .find(|e| e.key == "experiment")
            .map(|e| ExperimentId::parse(&e.value))
            .transpose()?
            .unwrap_or(ExperimentId::Fig3Linear);
        let mut cfg = ExperimentConfig::preset(id);
        // the batch size is split over the final SNR grid, whatever the key order
        let (batch, rest): (Vec<_>, Vec<_>) = entries.iter().partition(|e| e.key == "mini_batch_size");
        for e in rest.into_iter().chain(batch) {
            cfg.set(&e.key, &e.value).map_err(|err| Error::Config {
                line: e.line,
                message: err.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "experiment" => self.experiment = ExperimentId::parse(v)?,
            "seed" => {
                self.seed = parse_num(key, v)?;
            }
            "channel_taps" => self.channel.taps = parse_list(key, v)?,
            "nonlinearity" => self.channel.nonlinearity = Nonlinearity::parse(v)?,
            "snr_convention" => self.training.convention = SnrConvention::parse(v)?,
            "framing" => self.framing = Framing::parse(v)?,
            "coded" => self.coded = parse_bool(key, v)?,
            "uncoded_length" => self.uncoded_length = parse_num(key, v)?,
            "code_n" => self.code_n = parse_num(key, v)?,
            "code_k" => self.code_k = parse_num(key, v)?,
            "design_z" => self.design_z = parse_num(key, v)?,
            "cnn_structure" => self.cnn.layer_sizes = NetworkSpec::parse_sizes(v)?,
            "kernel_size" => self.cnn.kernel = parse_num(key, v)?,
            "sweep_structures" => {
                self.sweep = v
                    .split(';')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| Ok(NetworkSpec::cnn(&NetworkSpec::parse_sizes(s)?, self.cnn.kernel)))
                    .collect::<Result<_>>()?
            }
            "dnn_structure" => self.nnd.layer_sizes = NetworkSpec::parse_sizes(v)?,
            "snr_range" => self.training.snr_grid = parse_range(key, v)?,
            "training_samples_per_snr" => self.training.frames_per_snr = parse_num(key, v)?,
            "mini_batch_size" => {
                let b: usize = parse_num(key, v)?;
                let per_snr = self.training.snr_grid.len().max(1);
                if !b.is_multiple_of(per_snr) {
                    return Err(Error::InvalidSpec(format!(
                        "mini_batch_size {b} is not a multiple of the {per_snr} training SNRs"
                    )));
                }
                self.training.frames_per_snr = b / per_snr;
            }
            "learning_rate" => self.training.learning_rate = parse_num(key, v)?,
            "iterations" => self.training.iterations = parse_num(key, v)?,
            "init" => self.training.init = Init::parse(v)?,
            "nnd_iterations" => self.nnd_iterations = parse_num(key, v)?,
            "joint_iterations" => self.joint.iterations = parse_num(key, v)?,
            "joint_learning_rate" => self.joint.learning_rate = parse_num(key, v)?,
            "freeze_cnn" => self.joint.freeze_cnn = parse_bool(key, v)?,
            "test_snr_range" => self.test_snr = parse_range(key, v)?,
            "testing_samples_per_snr" => self.test_frames_per_snr = parse_num(key, v)?,
            "pilot_lengths" => self.pilot_lengths = parse_list(key, v)?,
            "bcjr_block_length" => self.bcjr_block_length = parse_num(key, v)?,
            "boundary_snr_db" => self.boundary_snr_db = parse_num(key, v)?,
            "boundary_min" => self.boundary_grid.min = parse_num(key, v)?,
            "boundary_max" => self.boundary_grid.max = parse_num(key, v)?,
            "boundary_step" => self.boundary_grid.step = parse_num(key, v)?,
            other => return Err(Error::Parse(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.cnn.validate()?;
        self.nnd.validate()?;
        for s in &self.sweep {
            s.validate()?;
        }
        self.training.validate()?;
        if self.cnn.kind != NetworkKind::Cnn || self.nnd.kind != NetworkKind::Dnn {
            return Err(Error::InvalidSpec("network kinds are fixed".into()));
        }
        if self.coded {
            self.code()?;
        } else if self.uncoded_length == 0 {
            return Err(Error::InvalidSpec("uncoded_length must be positive".into()));
        }
        if self.test_snr.is_empty() {
            return Err(Error::InvalidSpec("test SNR grid is empty".into()));
        }
        Ok(())
    }

    pub fn code(&self) -> Result<PolarCode> {
        PolarCode::new(self.code_n, self.code_k, self.design_z)
    }

    /// Frame layout used for training and evaluation on the experiment channel.
    pub fn frame_setup(&self) -> Result<FrameSetup> {
        Ok(if self.coded {
            FrameSetup::coded(self.channel.clone(), self.framing, self.code()?)
        } else {
            FrameSetup::uncoded(self.channel.clone(), self.framing, self.uncoded_length)
        })
    }

    /// Training schedule with the experiment seed applied.
    pub fn training_config(&self) -> TrainingConfig {
        TrainingConfig {
            seed: self.seed,
            ..self.training.clone()
        }
    }

    pub fn nnd_training_config(&self) -> TrainingConfig {
        TrainingConfig {
            iterations: self.nnd_iterations,
            ..self.training_config()
        }
    }

    /// Canonical `key = value` listing. Parsing it reproduces this config.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut out = vec![
            ("experiment", self.experiment.to_string()),
            ("seed", self.seed.to_string()),
            ("channel_taps", list(&self.channel.taps)),
            ("nonlinearity", self.channel.nonlinearity.to_string()),
            ("snr_convention", self.training.convention.to_string()),
            ("framing", self.framing.to_string()),
            ("coded", self.coded.to_string()),
            ("uncoded_length", self.uncoded_length.to_string()),
            ("code_n", self.code_n.to_string()),
            ("code_k", self.code_k.to_string()),
            ("design_z", self.design_z.to_string()),
            ("kernel_size", self.cnn.kernel.to_string()),
            ("cnn_structure", self.cnn.to_string()),
        ];
        if !self.sweep.is_empty() {
            let s: Vec<String> = self.sweep.iter().map(ToString::to_string).collect();
            out.push(("sweep_structures", s.join(";")));
        }
        out.extend([
            ("dnn_structure", self.nnd.to_string()),
            ("snr_range", list(&self.training.snr_grid)),
            ("training_samples_per_snr", self.training.frames_per_snr.to_string()),
            ("mini_batch_size", self.training.batch_size().to_string()),
            ("learning_rate", self.training.learning_rate.to_string()),
            ("iterations", self.training.iterations.to_string()),
            ("init", self.training.init.name().to_string()),
            ("nnd_iterations", self.nnd_iterations.to_string()),
            ("joint_iterations", self.joint.iterations.to_string()),
            ("joint_learning_rate", self.joint.learning_rate.to_string()),
            ("freeze_cnn", self.joint.freeze_cnn.to_string()),
            ("test_snr_range", list(&self.test_snr)),
            ("testing_samples_per_snr", self.test_frames_per_snr.to_string()),
            (
                "pilot_lengths",
                self.pilot_lengths
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("bcjr_block_length", self.bcjr_block_length.to_string()),
            ("boundary_snr_db", self.boundary_snr_db.to_string()),
            ("boundary_min", self.boundary_grid.min.to_string()),
            ("boundary_max", self.boundary_grid.max.to_string()),
            ("boundary_step", self.boundary_grid.step.to_string()),
        ]);
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn to_text(&self) -> String {
        self.to_pairs().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// One `key = value` line of a config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits a flat config file into entries. `#` starts a comment; keys may
/// appear once.
pub fn parse_flat(text: &str) -> Result<Vec<ConfigEntry>> {
    let mut entries: Vec<ConfigEntry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Config {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::Config {
                line,
                message: format!("bad key `{key}`"),
            });
        }
        if let Some(prev) = entries.iter().find(|e| e.key == key) {
            return Err(Error::Config {
                line,
                message: format!("`{key}` already set on line {}", prev.line),
            });
        }
        entries.push(ConfigEntry {
            line,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(entries)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Parse(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parse(format!("`{key}`: expected true or false, got `{v}`"))),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let inner = v.trim_start_matches(['[', '{']).trim_end_matches([']', '}']);
    let items: Vec<T> = inner
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num(key, s.trim()))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Parse(format!("`{key}`: empty list")));
    }
    Ok(items)
}

/// `lo:hi` (unit step), `lo:step:hi`, or a comma list.
pub fn parse_range(key: &str, v: &str) -> Result<Vec<f64>> {
    if !v.contains(':') {
        return parse_list(key, v);
    }
    let parts: Vec<f64> = v.split(':').map(|s| parse_num(key, s.trim())).collect::<Result<_>>()?;
    let (lo, step, hi) = match parts[..] {
        [lo, hi] => (lo, 1.0, hi),
        [lo, step, hi] => (lo, step, hi),
        _ => return Err(Error::Parse(format!("`{key}`: bad range `{v}`"))),
    };
    if step.is_nan() || step <= 0.0 || hi < lo {
        return Err(Error::Parse(format!("`{key}`: bad range `{v}`")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_parser_handles_comments_and_errors() {
        let e = parse_flat("# header\nseed = 3 # trailing\n\n learning_rate=0.01\n").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!((e[0].line, e[0].key.as_str(), e[0].value.as_str()), (2, "seed", "3"));
        assert!(matches!(parse_flat("seed 3\n"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(
            parse_flat("a = 1\na = 2\n"),
            Err(Error::Config { line: 2, .. })
        ));
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("k", "0:3").unwrap(), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(parse_range("k", "1:2:7").unwrap(), vec![1.0, 3.0, 5.0, 7.0]);
        assert_eq!(parse_range("k", "4, 8").unwrap(), vec![4.0, 8.0]);
        assert!(parse_range("k", "3:1").is_err());
    }

    #[test]
    fn presets_round_trip_through_text() {
        for id in ExperimentId::ALL {
            let cfg = ExperimentConfig::preset(id);
            cfg.validate().unwrap();
            assert_eq!(ExperimentConfig::from_text(&cfg.to_text()).unwrap(), cfg, "{id}");
        }
    }

    #[test]
    fn table_keys_apply() {
        let cfg = ExperimentConfig::from_text(
            "experiment = fig5_nonlinear\ncnn_structure = {8,16,8,1}\nsnr_range = 0:5\nmini_batch_size = 120\n",
        )
        .unwrap();
        assert_eq!(cfg.training.frames_per_snr, 20);
        assert_eq!(cfg.cnn.layer_sizes, vec![8, 16, 8, 1]);
        assert_eq!(cfg.channel.nonlinearity, Nonlinearity::PolyCosMagnitude);
        let err = ExperimentConfig::from_text("seed = 1\nbogus = 2\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
        assert!(matches!(
            ExperimentConfig::from_text("experiment = fig9\n"),
            Err(Error::UnknownExperiment(_))
        ));
    }

    #[test]
    fn boundary_axis() {
        assert_eq!(BoundaryGrid::default().axis().unwrap().len(), 121);
    }
}

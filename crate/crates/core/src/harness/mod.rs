//! Monte-Carlo evaluation, experiment configuration and output files.

mod ber;
mod config;
mod experiment;
mod output;
mod reference;

pub use ber::{estimate_taps, evaluate_ber, wilson_interval, BerRecord, Csi, EvalPlan, EvalPoint, Receiver};
pub use config::{parse_flat, parse_range, BoundaryGrid, ConfigEntry, ExperimentConfig, ExperimentId};
pub use experiment::{
    boundary_csv, export_decision_boundary, long_block_bcjr, run_experiment, run_structure_sweep, structure_label,
    BoundaryPoint, Curve, ExperimentOutput, SweepResult,
};
pub use output::{content_hash, curve_csv, sci, sha256_hex, write_text, Manifest};
pub use reference::{
    parse_reference, reference_curve, reference_curves, reference_text, ReferenceCurve, REFERENCE_SHA256,
};

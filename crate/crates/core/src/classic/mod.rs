//! MAP/BCJR equalization and pilot-based channel estimation.

mod bcjr;
mod estimate;

pub use bcjr::{bcjr_equalize, posterior_llr, symbols_in_frame, Trellis};
pub use estimate::{ls_channel_estimate, PilotRecord};

use crate::error::Result;
use crate::harness::{evaluate_ber, BerRecord, Csi, EvalPlan, Receiver};
use crate::models::FrameSetup;

/// Monte-Carlo BER of hard-decided BCJR posteriors at every point of `plan`.
pub fn map_ber_baseline(setup: &FrameSetup, csi: Csi, plan: &EvalPlan) -> Result<Vec<BerRecord>> {
    evaluate_ber(Receiver::Bcjr(csi), setup, plan)
}

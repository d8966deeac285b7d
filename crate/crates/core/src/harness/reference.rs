//! BER curves transcribed from the published figures, used as plot overlays.

use crate::error::{Error, Result};

use super::output::sha256_hex;

const REFERENCE_CSV: &str = include_str!("../../data/reference_curves.csv");

/// SHA-256 of `data/reference_curves.csv`.
pub const REFERENCE_SHA256: &str = "0340d9bfb9625c2a4f6359af8ceb12c3f7481a8cab7ef120cd70592ac97f5c9a";

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCurve {
    pub figure: String,
    pub curve: String,
    /// `(snr_db, ber)` pairs in file order.
    pub points: Vec<(f64, f64)>,
}

pub fn reference_text() -> &'static str {
    REFERENCE_CSV
}

/// Parses the embedded reference file after checking its digest.
pub fn reference_curves() -> Result<Vec<ReferenceCurve>> {
    let digest = sha256_hex(REFERENCE_CSV.as_bytes());
    if digest != REFERENCE_SHA256 {
        return Err(Error::Parse(format!("reference data checksum mismatch: {digest}")));
    }
    parse_reference(REFERENCE_CSV)
}

pub fn parse_reference(text: &str) -> Result<Vec<ReferenceCurve>> {
    let mut curves: Vec<ReferenceCurve> = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != "figure,curve,snr_db,ber" {
                return Err(Error::Parse(format!("unexpected reference header `{line}`")));
            }
            header_seen = true;
            continue;
        }
        let bad = || Error::Parse(format!("reference line {}: `{line}`", i + 1));
        let fields: Vec<&str> = line.split(',').collect();
        let [figure, curve, snr, ber] = fields[..] else {
            return Err(bad());
        };
        let snr: f64 = snr.parse().map_err(|_| bad())?;
        let ber: f64 = ber.parse().map_err(|_| bad())?;
        match curves.last_mut() {
            Some(c) if c.figure == figure && c.curve == curve => c.points.push((snr, ber)),
            _ => curves.push(ReferenceCurve {
                figure: figure.to_string(),
                curve: curve.to_string(),
                points: vec![(snr, ber)],
            }),
        }
    }
    Ok(curves)
}

/// Looks up one curve by figure and name.
pub fn reference_curve(figure: &str, curve: &str) -> Result<ReferenceCurve> {
    reference_curves()?
        .into_iter()
        .find(|c| c.figure == figure && c.curve == curve)
        .ok_or_else(|| Error::Parse(format!("no reference curve {figure}/{curve}")))
}

impl ReferenceCurve {
    pub fn ber_at(&self, snr_db: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|(s, _)| (s - snr_db).abs() < 1e-9)
            .map(|&(_, b)| b)
    }
}

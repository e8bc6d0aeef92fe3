//! Modulation transfer from square-wave bar targets.
//!
//! For each frequency a vertical bar chart is captured and reconstructed;
//! the Michelson contrast of the reconstruction's column profile (central
//! half of the frame) divided by the target's contrast is the MTF value.

use rayon::prelude::*;

use super::scenes::{make_chart, ChartKind};
use super::sweep::{run_point, SweepConfig};
use crate::error::{Error, Result};
use crate::frame::Frame;

/// Upper clamp on MTF values; allows for ringing overshoot.
pub const MTF_CEILING: f64 = 1.05;

#[derive(Debug, Clone, PartialEq)]
pub struct MtfCurve {
    /// Cycles per mirror.
    pub frequencies: Vec<f64>,
    pub mtf: Vec<f64>,
    pub alpha: f64,
    pub measurements: usize,
    /// Every solve behind the curve had a non-increasing objective.
    pub monotone: bool,
}

impl MtfCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("frequency,mtf,alpha,T\n");
        for (f, m) in self.frequencies.iter().zip(&self.mtf) {
            s.push_str(&format!("{f},{m},{},{}\n", self.alpha, self.measurements));
        }
        s
    }
}

/// `(max − min) / (max + min)` of the per-column means over the central
/// 50 % of rows and columns.
pub fn michelson_contrast(frame: &Frame) -> f64 {
    let (rows, cols) = frame.shape();
    let (r0, r1) = (rows / 4, (rows - rows / 4).max(rows / 4 + 1));
    let (c0, c1) = (cols / 4, (cols - cols / 4).max(cols / 4 + 1));
    let profile: Vec<f64> = (c0..c1)
        .map(|c| (r0..r1).map(|r| frame.get(r, c)).sum::<f64>() / (r1 - r0) as f64)
        .collect();
    let max = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = profile.iter().copied().fold(f64::INFINITY, f64::min);
    if max + min <= 0.0 {
        0.0
    } else {
        (max - min) / (max + min)
    }
}

pub fn mtf_curve(
    cfg: &SweepConfig,
    measurements: usize,
    frequencies: &[f64],
    snr_db: Option<f64>,
) -> Result<MtfCurve> {
    if frequencies.is_empty() {
        return Err(Error::Config("no MTF frequencies given".into()));
    }
    if let Some(f) = frequencies.iter().find(|&&f| !(f > 0.0 && f <= 0.5)) {
        return Err(Error::Config(format!("frequency {f} must lie in (0, 0.5]")));
    }
    let results = frequencies
        .par_iter()
        .enumerate()
        .map(|(k, &frequency)| {
            let target = make_chart(&cfg.geometry, ChartKind::Bars { frequency })?;
            let reference = michelson_contrast(&target);
            if reference == 0.0 {
                return Err(Error::Invalid(format!(
                    "bar target at {frequency} cycles/mirror has no contrast in the central region"
                )));
            }
            let (point, estimate) = run_point(&target, cfg, measurements, snr_db, cfg.noise_seed(k))?;
            let value = (michelson_contrast(&estimate) / reference).clamp(0.0, MTF_CEILING);
            Ok((value, point.alpha, point.monotone))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MtfCurve {
        frequencies: frequencies.to_vec(),
        mtf: results.iter().map(|r| r.0).collect(),
        alpha: results[0].1,
        measurements,
        monotone: results.iter().all(|r| r.2),
    })
}

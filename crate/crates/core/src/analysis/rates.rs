//! Spatio-temporal resolution arithmetic.
//!
//! A K×K sensor read in step with a DMD at `f_dmd` Hz delivers
//! `M_r = K² · f_dmd` samples per second. With compression factor α the
//! camera recovers `STR = α · M_r` pixels per second.

use crate::error::{Error, Result};

/// Frame sizes (in megapixels) listed in [`RateReport::achievable`].
pub const REPORT_MEGAPIXELS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Samples per second, `K² · f_dmd`.
    pub measurement_rate: f64,
    pub compression_factor: f64,
    /// Pixels per second, `α · M_r`.
    pub str_rate: f64,
    /// `(megapixels, frames per second)` sustainable at `str_rate`.
    pub achievable: Vec<(f64, f64)>,
}

pub fn measurement_rate(k: u64, f_dmd: f64) -> f64 {
    (k * k) as f64 * f_dmd
}

pub fn rate_report(k: u64, f_dmd: f64, alpha: f64) -> Result<RateReport> {
    if k == 0 || !(f_dmd > 0.0 && f_dmd.is_finite()) || !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!(
            "rates need positive inputs (K={k}, f_dmd={f_dmd}, alpha={alpha})"
        )));
    }
    let measurement_rate = measurement_rate(k, f_dmd);
    let str_rate = alpha * measurement_rate;
    Ok(RateReport {
        measurement_rate,
        compression_factor: alpha,
        str_rate,
        achievable: REPORT_MEGAPIXELS
            .iter()
            .map(|&mp| (mp, fps_at(str_rate, mp)))
            .collect(),
    })
}

/// Frame rate at which `str_rate` pixels/s fill frames of `megapixels` · 10⁶ pixels.
pub fn fps_at(str_rate: f64, megapixels: f64) -> f64 {
    str_rate / (megapixels * 1e6)
}

/// α = N / (T · K²), returned unrounded.
pub fn compression_factor(n_dmd_pixels: u64, t: u64, n_sensor_pixels: u64) -> Result<f64> {
    if n_dmd_pixels == 0 || t == 0 || n_sensor_pixels == 0 {
        return Err(Error::Config("compression factor needs positive counts".into()));
    }
    Ok(n_dmd_pixels as f64 / (t as f64 * n_sensor_pixels as f64))
}

/// Coarse display form: one significant figure below 1, nearest integer otherwise.
pub fn rounded_display(value: f64) -> f64 {
    if value >= 1.0 {
        value.round()
    } else {
        let mag = 10f64.powf(value.log10().floor());
        (value / mag).round() * mag
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prototype_rates() {
        let r = rate_report(64, 480.0, 16.0).unwrap();
        assert_eq!(r.measurement_rate, 1_966_080.0);
        assert_eq!(r.str_rate, 31_457_280.0);
        let one_mp = r.achievable.iter().find(|(mp, _)| *mp == 1.0).unwrap().1;
        assert!((one_mp - 31.45728).abs() < 1e-9);
        assert_eq!(rounded_display(one_mp), 31.0);
    }

    #[test]
    fn single_pixel_camera_rates() {
        let r = rate_report(1, 20_000.0, 16.0).unwrap();
        assert!((fps_at(r.str_rate, 1.0) - 0.32).abs() < 1e-12);
    }

    #[test]
    fn nyquist_megapixel_camera() {
        let r = rate_report(1000, 30.0, 1.0).unwrap();
        assert_eq!(r.str_rate, 30e6);
    }

    #[test]
    fn alpha_values() {
        let a = compression_factor(1_000_000, 64, 4096).unwrap();
        assert!((a - 3.814_697_265_625).abs() < 1e-12);
        assert_eq!(rounded_display(a), 4.0);
        let a = compression_factor(1_000_000, 512, 4096).unwrap();
        assert!((a - 0.476_837_158_203_125).abs() < 1e-12);
        assert_eq!(rounded_display(a), 0.5);
        assert_eq!(compression_factor(4096, 64, 64).unwrap(), 1.0);
        assert!(compression_factor(0, 1, 1).is_err());
        assert!(rate_report(0, 1.0, 1.0).is_err());
    }
}

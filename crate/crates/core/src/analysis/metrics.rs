//! Full-reference image quality.

use crate::error::{check_dim, Error, Result};
use crate::frame::Frame;

fn check_same(x: &Frame, reference: &Frame) -> Result<()> {
    check_dim("rows", reference.rows(), x.rows())?;
    check_dim("cols", reference.cols(), x.cols())
}

pub fn mse(x: &Frame, reference: &Frame) -> Result<f64> {
    check_same(x, reference)?;
    let s: f64 = x
        .data()
        .iter()
        .zip(reference.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(s / x.len() as f64)
}

/// `10·log10(peak² / mse)` in dB; `peak` defaults to `max(reference)`.
/// Identical images give `f64::INFINITY`.
pub fn psnr(x: &Frame, reference: &Frame, peak: Option<f64>) -> Result<f64> {
    let peak = peak.unwrap_or_else(|| reference.max());
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::Invalid(format!("PSNR peak {peak} must be positive")));
    }
    let m = mse(x, reference)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / m).log10())
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let half = (size / 2) as f64;
    let mut w = Vec::with_capacity(size * size);
    for r in 0..size {
        for c in 0..size {
            let dy = r as f64 - half;
            let dx = c as f64 - half;
            w.push((-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp());
        }
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Mean SSIM with `peak = max(reference)`.
pub fn ssim(x: &Frame, reference: &Frame) -> Result<f64> {
    let peak = reference.max();
    ssim_with_peak(x, reference, if peak > 0.0 { peak } else { 1.0 })
}

/// Mean SSIM over all valid 11×11 Gaussian (σ = 1.5) windows with
/// `C1 = (0.01·peak)²` and `C2 = (0.03·peak)²`. Images smaller than the
/// window use the largest odd window that fits.
pub fn ssim_with_peak(x: &Frame, reference: &Frame, peak: f64) -> Result<f64> {
    check_same(x, reference)?;
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::Invalid(format!("SSIM peak {peak} must be positive")));
    }
    let mut size = SSIM_WINDOW.min(x.rows()).min(x.cols());
    if size % 2 == 0 {
        size -= 1;
    }
    let window = gaussian_window(size, SSIM_SIGMA);
    let c1 = (SSIM_K1 * peak).powi(2);
    let c2 = (SSIM_K2 * peak).powi(2);
    let mut total = 0.0;
    let mut count = 0usize;
    for r0 in 0..=x.rows() - size {
        for c0 in 0..=x.cols() - size {
            let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for r in 0..size {
                for c in 0..size {
                    let w = window[r * size + c];
                    let a = x.get(r0 + r, c0 + c);
                    let b = reference.get(r0 + r, c0 + c);
                    mx += w * a;
                    my += w * b;
                    sxx += w * a * a;
                    syy += w * b * b;
                    sxy += w * a * b;
                }
            }
            let vx = sxx - mx * mx;
            let vy = syy - my * my;
            let cov = sxy - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_images() {
        let f = Frame::from_fn(16, 16, |r, c| ((r * c) % 7) as f64 / 7.0);
        assert_eq!(psnr(&f, &f, None).unwrap(), f64::INFINITY);
        assert!((ssim(&f, &f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_offset_psnr() {
        let r = Frame::filled(8, 8, 0.5);
        let x = Frame::filled(8, 8, 0.6);
        assert!((psnr(&x, &r, Some(1.0)).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn constant_ssim_is_luminance_only() {
        let (a, b, peak) = (0.5, 0.6, 1.0);
        let r = Frame::filled(12, 12, a);
        let x = Frame::filled(12, 12, b);
        let c1 = (0.01f64 * peak).powi(2);
        let expected = (2.0 * a * b + c1) / (a * a + b * b + c1);
        let got = ssim_with_peak(&x, &r, peak).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn symmetric_with_fixed_peak() {
        let a = Frame::from_fn(14, 13, |r, c| ((r + 2 * c) % 5) as f64 / 5.0);
        let b = Frame::from_fn(14, 13, |r, c| ((3 * r + c) % 4) as f64 / 4.0);
        assert_eq!(psnr(&a, &b, Some(1.0)).unwrap(), psnr(&b, &a, Some(1.0)).unwrap());
        let s1 = ssim_with_peak(&a, &b, 1.0).unwrap();
        let s2 = ssim_with_peak(&b, &a, 1.0).unwrap();
        assert!((s1 - s2).abs() < 1e-14);
        assert!((-1.0..=1.0).contains(&s1));
    }

    #[test]
    fn small_images_use_smaller_window() {
        let a = Frame::from_fn(4, 6, |r, c| (r + c) as f64);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_sizes() {
        assert!(psnr(&Frame::zeros(2, 2), &Frame::filled(2, 3, 1.0), None).is_err());
        assert!(ssim(&Frame::zeros(2, 2), &Frame::zeros(3, 2)).is_err());
        assert!(psnr(&Frame::zeros(2, 2), &Frame::zeros(2, 2), None).is_err());
    }
}

//! PSNR and SSIM on real-valued (magnitude) images.

use crate::error::{Error, Result};
use crate::grid::RealGrid;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    /// `f64::INFINITY` when the images are identical.
    pub psnr: f64,
    pub ssim: f64,
    pub data_range: f64,
}

fn check_range(data_range: f64) -> Result<()> {
    if data_range > 0.0 && data_range.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "metrics",
            "data_range",
            format!("must be positive, got {data_range}"),
        ))
    }
}

pub fn mse(reference: &RealGrid, test: &RealGrid) -> Result<f64> {
    test.expect_shape("metrics", "test", reference.shape())?;
    let n = reference.data().len() as f64;
    Ok(reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

/// `10 log10(range^2 / mse)` in dB.
pub fn psnr(reference: &RealGrid, test: &RealGrid, data_range: f64) -> Result<f64> {
    check_range(data_range)?;
    let e = mse(reference, test)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (data_range * data_range / e).log10())
}

/// Normalized 1-D Gaussian taps.
fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size / 2) as f64;
    let raw: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - c;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// The 11x11 window as a row-major grid of weights summing to one.
pub fn ssim_window() -> Vec<f64> {
    let g = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let mut out = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    for a in &g {
        for b in &g {
            out.push(a * b);
        }
    }
    out
}

/// Valid-mode separable filter.
fn filter_valid(data: &[f64], h: usize, w: usize, taps: &[f64]) -> (Vec<f64>, usize, usize) {
    let k = taps.len();
    let ow = w - k + 1;
    let oh = h - k + 1;
    let mut rows = vec![0.0; h * ow];
    for r in 0..h {
        let line = &data[r * w..(r + 1) * w];
        for c in 0..ow {
            rows[r * ow + c] = taps.iter().zip(&line[c..c + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = taps.iter().enumerate().map(|(i, t)| t * rows[(r + i) * ow + c]).sum();
        }
    }
    (out, oh, ow)
}

/// Mean SSIM over every position where the full window fits.
pub fn ssim(reference: &RealGrid, test: &RealGrid, data_range: f64) -> Result<f64> {
    check_range(data_range)?;
    test.expect_shape("metrics", "test", reference.shape())?;
    let (h, w) = reference.shape();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::invalid(
            "metrics",
            "shape",
            format!("ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}"),
        ));
    }
    let taps = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let x = reference.data();
    let y = test.data();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let (mx, _, _) = filter_valid(x, h, w, &taps);
    let (my, _, _) = filter_valid(y, h, w, &taps);
    let (exx, _, _) = filter_valid(&xx, h, w, &taps);
    let (eyy, _, _) = filter_valid(&yy, h, w, &taps);
    let (exy, _, _) = filter_valid(&xy, h, w, &taps);
    let c1 = (SSIM_K1 * data_range).powi(2);
    let c2 = (SSIM_K2 * data_range).powi(2);
    let total: f64 = (0..mx.len())
        .map(|i| {
            ssim_index(
                mx[i],
                my[i],
                exx[i] - mx[i] * mx[i],
                eyy[i] - my[i] * my[i],
                exy[i] - mx[i] * my[i],
                c1,
                c2,
            )
        })
        .sum();
    Ok(total / mx.len() as f64)
}

pub(crate) fn ssim_index(mx: f64, my: f64, vx: f64, vy: f64, cxy: f64, c1: f64, c2: f64) -> f64 {
    ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}

/// Both metrics with `data_range = max(reference)`.
pub fn evaluate(reference: &RealGrid, test: &RealGrid) -> Result<MetricReport> {
    let data_range = reference.max();
    check_range(data_range)?;
    Ok(MetricReport {
        psnr: psnr(reference, test, data_range)?,
        ssim: ssim(reference, test, data_range)?,
        data_range,
    })
}

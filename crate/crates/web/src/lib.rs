//! Browser bindings for the interactive demo page in `www/`.
//!
//! Every export has a plain Rust counterpart so the logic is testable on the
//! host without a JavaScript engine.

use std::sync::Arc;

use kdiff_core::fft::{fft2c, ifft2c};
use kdiff_core::grid::{ComplexGrid, Domain, RealGrid};
use kdiff_core::masks::{make_circle_mask, make_weight};
use kdiff_core::metrics::evaluate;
use kdiff_core::recon::{cascade_reconstruct, ModelSlot, ReconConfig};
use kdiff_core::sampling::{apply_forward, generate, PatternKind};
use kdiff_core::sde::{make_schedule, GaussianPrior, GaussianScore, DEFAULT_SIGMA_MAX, DEFAULT_SIGMA_MIN};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

const MAX_SIZE: usize = 256;
const TRAINING_PHANTOMS: usize = 48;

fn check_size(size: usize) -> Result<(), String> {
    if (8..=MAX_SIZE).contains(&size) {
        Ok(())
    } else {
        Err(format!("size must be between 8 and {MAX_SIZE}, got {size}"))
    }
}

fn to_f32(values: &[f64]) -> Vec<f32> {
    values.iter().map(|&v| v as f32).collect()
}

/// Rescales to [0, 1]; constant input maps to zeros.
fn normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 })
        .collect()
}

/// Log-scaled weighting matrix followed by a circle mask, each `size * size`
/// values in [0, 1], row-major.
pub fn preview_weight_and_mask(size: usize, r: f64, p: f64, radius: f64) -> Result<Vec<f32>, String> {
    check_size(size)?;
    let w = make_weight(size, size, r, p, 1e-6).map_err(|e| e.to_string())?;
    let logw: Vec<f64> = w.values().data().iter().map(|v| v.ln()).collect();
    let m = make_circle_mask(size, size, radius).map_err(|e| e.to_string())?;
    let mut out = to_f32(&normalize(&logw));
    out.extend(m.mask().data().iter().map(|&b| if b { 1.0f32 } else { 0.0 }));
    Ok(out)
}

#[wasm_bindgen]
pub fn weight_and_mask(size: usize, r: f64, p: f64, radius: f64) -> Result<Vec<f32>, JsError> {
    preview_weight_and_mask(size, r, p, radius).map_err(|e| JsError::new(&e))
}

/// A generated sampling mask and its acceleration.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct PatternPreview {
    mask: Vec<f32>,
    achieved_r: f64,
    sampled: usize,
}

#[wasm_bindgen]
impl PatternPreview {
    /// Row-major 0/1 values.
    #[wasm_bindgen(getter)]
    pub fn mask(&self) -> Vec<f32> {
        self.mask.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn achieved_r(&self) -> f64 {
        self.achieved_r
    }

    #[wasm_bindgen(getter)]
    pub fn sampled(&self) -> usize {
        self.sampled
    }
}

pub fn preview_pattern(kind: &str, size: usize, accel: f64, acs: usize, seed: u64) -> Result<PatternPreview, String> {
    check_size(size)?;
    let kind = PatternKind::parse(kind).ok_or_else(|| format!("unknown pattern kind {kind:?}"))?;
    let p = generate(kind, size, size, accel, acs, seed).map_err(|e| e.to_string())?;
    Ok(PatternPreview {
        mask: p.mask.data().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        achieved_r: p.achieved_r,
        sampled: p.mask.popcount(),
    })
}

#[wasm_bindgen]
pub fn pattern(kind: &str, size: usize, accel: f64, acs: usize, seed: u32) -> Result<PatternPreview, JsError> {
    preview_pattern(kind, size, accel, acs, u64::from(seed)).map_err(|e| JsError::new(&e))
}

/// Ground truth, zero-filled and diffusion reconstructions of a phantom.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct ReconPreview {
    truth: Vec<f32>,
    zero_filled: Vec<f32>,
    recon: Vec<f32>,
    achieved_r: f64,
    psnr_zero_filled: f64,
    ssim_zero_filled: f64,
    psnr: f64,
    ssim: f64,
}

#[wasm_bindgen]
impl ReconPreview {
    #[wasm_bindgen(getter)]
    pub fn truth(&self) -> Vec<f32> {
        self.truth.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn zero_filled(&self) -> Vec<f32> {
        self.zero_filled.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn recon(&self) -> Vec<f32> {
        self.recon.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn achieved_r(&self) -> f64 {
        self.achieved_r
    }

    #[wasm_bindgen(getter)]
    pub fn psnr_zero_filled(&self) -> f64 {
        self.psnr_zero_filled
    }

    #[wasm_bindgen(getter)]
    pub fn ssim_zero_filled(&self) -> f64 {
        self.ssim_zero_filled
    }

    #[wasm_bindgen(getter)]
    pub fn psnr(&self) -> f64 {
        self.psnr
    }

    #[wasm_bindgen(getter)]
    pub fn ssim(&self) -> f64 {
        self.ssim
    }
}

/// Head-like phantom: an outer ellipse with a few random inner ellipses.
pub fn phantom(size: usize, rng: &mut ChaCha8Rng) -> RealGrid {
    let n = size as f64;
    let mut blobs = vec![(0.0, 0.0, 0.42 * n, 0.34 * n, 0.0, 0.8)];
    for _ in 0..4 {
        blobs.push((
            rng.random_range(-0.18..0.18) * n,
            rng.random_range(-0.15..0.15) * n,
            rng.random_range(0.04..0.14) * n,
            rng.random_range(0.04..0.12) * n,
            rng.random_range(0.0..std::f64::consts::PI),
            rng.random_range(-0.4..0.4),
        ));
    }
    RealGrid::from_fn(size, size, |r, c| {
        let y = r as f64 - n / 2.0;
        let x = c as f64 - n / 2.0;
        blobs
            .iter()
            .filter(|&&(cy, cx, ay, ax, th, _)| {
                let (dy, dx) = (y - cy, x - cx);
                let u = dx * th.cos() + dy * th.sin();
                let v = -dx * th.sin() + dy * th.cos();
                (u / ax).powi(2) + (v / ay).powi(2) <= 1.0
            })
            .map(|b| b.5)
            .sum::<f64>()
            .max(0.0)
    })
    .expect("phantom size is nonzero")
}

/// Per-pixel k-space mean and variance over random phantoms.
fn fit_prior(size: usize, seed: u64) -> Result<GaussianPrior, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = size * size;
    let mut sum = vec![Complex64::new(0.0, 0.0); n];
    let mut sq = vec![0.0f64; n];
    for _ in 0..TRAINING_PHANTOMS {
        let k = fft2c(&phantom(size, &mut rng).to_complex(Domain::Image)).map_err(|e| e.to_string())?;
        for (i, z) in k.data().iter().enumerate() {
            sum[i] += z;
            sq[i] += z.norm_sqr();
        }
    }
    let t = TRAINING_PHANTOMS as f64;
    let mean: Vec<Complex64> = sum.iter().map(|s| s / t).collect();
    // Half of E|x - mu|^2 per real component.
    let var: Vec<f64> = mean
        .iter()
        .zip(&sq)
        .map(|(m, s)| (0.5 * (s / t - m.norm_sqr())).max(1e-6))
        .collect();
    GaussianPrior::new(
        ComplexGrid::new(size, size, Domain::KSpace, mean).map_err(|e| e.to_string())?,
        RealGrid::new(size, size, var).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())
}

/// Undersamples a fresh phantom and reconstructs it with a weighted structure
/// slot and a circle-masked detail slot, both Gaussian priors fitted to other
/// phantoms.
pub fn run_phantom_demo(size: usize, kind: &str, accel: f64, levels: usize, seed: u64) -> Result<ReconPreview, String> {
    check_size(size)?;
    let kind = PatternKind::parse(kind).ok_or_else(|| format!("unknown pattern kind {kind:?}"))?;
    let err = |e: kdiff_core::Error| e.to_string();
    let prior = fit_prior(size, 1000 + seed)?;
    let truth_img = phantom(size, &mut ChaCha8Rng::seed_from_u64(seed));
    let truth = fft2c(&truth_img.to_complex(Domain::Image)).map_err(err)?;
    let pattern = generate(kind, size, size, accel, (size / 8).max(2), seed).map_err(err)?;
    let meas = apply_forward(&truth, &pattern, 0.0, 0).map_err(err)?;

    let w = make_weight(size, size, 0.075, 0.5, 1e-6).map_err(err)?;
    let m = make_circle_mask(size, size, size as f64 / 4.0).map_err(err)?;
    let slots = vec![
        ModelSlot::structure(
            Arc::new(GaussianScore::new("structure", prior.weighted(&w).map_err(err)?)),
            w,
        ),
        ModelSlot::detail(
            Arc::new(GaussianScore::new("detail", prior.masked(m.mask()).map_err(err)?)),
            m,
        ),
    ];
    let schedule = make_schedule(DEFAULT_SIGMA_MIN, DEFAULT_SIGMA_MAX, levels).map_err(err)?;
    let cfg = ReconConfig::new(schedule, slots).with_seed(seed);
    let result = cascade_reconstruct(&meas, &cfg).map_err(err)?;

    let zf = ifft2c(&meas.y).map_err(err)?.magnitude();
    let rec = result.image.magnitude();
    let zf_m = evaluate(&truth_img, &zf).map_err(err)?;
    let rec_m = evaluate(&truth_img, &rec).map_err(err)?;
    let range = truth_img.max();
    let scale = |g: &RealGrid| g.data().iter().map(|v| (v / range).clamp(0.0, 1.0) as f32).collect();
    Ok(ReconPreview {
        truth: scale(&truth_img),
        zero_filled: scale(&zf),
        recon: scale(&rec),
        achieved_r: pattern.achieved_r,
        psnr_zero_filled: zf_m.psnr,
        ssim_zero_filled: zf_m.ssim,
        psnr: rec_m.psnr,
        ssim: rec_m.ssim,
    })
}

#[wasm_bindgen]
pub fn phantom_demo(size: usize, kind: &str, accel: f64, levels: usize, seed: u32) -> Result<ReconPreview, JsError> {
    run_phantom_demo(size, kind, accel, levels, u64::from(seed)).map_err(|e| JsError::new(&e))
}

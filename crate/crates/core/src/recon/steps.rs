use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::ComplexGrid;
use crate::sampling::Measurement;
use crate::sde::{draw_like, NoiseSource, ScoreProvider};

pub const DEFAULT_SNR: f64 = 0.16;
pub const DEFAULT_EPS_FLOOR: f64 = 1e-12;

fn checked_score(provider: &dyn ScoreProvider, x: &ComplexGrid, sigma: f64) -> Result<ComplexGrid> {
    let s = provider.score(x, sigma)?;
    x.expect_shape("recon", provider.label(), s.shape())?;
    if !s.is_finite() {
        return Err(Error::NonFiniteScore {
            module: "recon",
            label: provider.label().to_string(),
        });
    }
    Ok(s)
}

/// Reverse-diffusion predictor from level `sigma_hi` down to `sigma_lo`:
/// `x + (sigma_hi^2 - sigma_lo^2) s(x, sigma_hi) + sqrt(sigma_hi^2 - sigma_lo^2) z`.
pub fn predictor_step(
    x: &ComplexGrid,
    provider: &dyn ScoreProvider,
    sigma_lo: f64,
    sigma_hi: f64,
    noise: &mut dyn NoiseSource,
) -> Result<ComplexGrid> {
    if !(sigma_lo >= 0.0 && sigma_hi > sigma_lo && sigma_hi.is_finite()) {
        return Err(Error::invalid(
            "recon",
            "sigma",
            format!("predictor needs sigma_hi > sigma_lo >= 0, got {sigma_hi} and {sigma_lo}"),
        ));
    }
    let s = checked_score(provider, x, sigma_hi)?;
    let delta = sigma_hi * sigma_hi - sigma_lo * sigma_lo;
    let root = delta.sqrt();
    let z = draw_like(x, noise);
    let data = x
        .data()
        .iter()
        .zip(s.data())
        .zip(&z)
        .map(|((xi, si), zi)| xi + si * delta + zi * root)
        .collect();
    Ok(ComplexGrid::from_parts_unchecked(
        x.height(),
        x.width(),
        x.domain(),
        data,
    ))
}

/// Langevin step size rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `eps = 2 (snr |z| / |s|)^2`, recomputed every call. When the score
    /// vanishes the previous valid step is reused, or `floor` if none exists.
    Snr {
        snr: f64,
        floor: f64,
    },
    Fixed(f64),
}

impl Default for StepSize {
    fn default() -> Self {
        StepSize::Snr {
            snr: DEFAULT_SNR,
            floor: DEFAULT_EPS_FLOOR,
        }
    }
}

/// Remembers the last step size computed from a nonzero score.
#[derive(Debug, Clone, Copy, Default)]
pub struct CorrectorState {
    pub last_eps: Option<f64>,
}

/// Annealed Langevin corrector at fixed `sigma`:
/// `x + eps s(x, sigma) + sqrt(2 eps) z`.
pub fn corrector_step(
    x: &ComplexGrid,
    provider: &dyn ScoreProvider,
    sigma: f64,
    step: StepSize,
    noise: &mut dyn NoiseSource,
    state: &mut CorrectorState,
) -> Result<ComplexGrid> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(
            "recon",
            "sigma",
            format!("corrector needs sigma > 0, got {sigma}"),
        ));
    }
    let s = checked_score(provider, x, sigma)?;
    let z = draw_like(x, noise);
    let eps = match step {
        StepSize::Fixed(eps) => {
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(Error::invalid(
                    "recon",
                    "eps",
                    format!("must be non-negative, got {eps}"),
                ));
            }
            eps
        }
        StepSize::Snr { snr, floor } => {
            if !(snr > 0.0 && snr.is_finite()) {
                return Err(Error::invalid("recon", "snr", format!("must be positive, got {snr}")));
            }
            let s_norm = s.norm();
            if s_norm > 0.0 {
                let z_norm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                let ratio = snr * z_norm / s_norm;
                let eps = 2.0 * ratio * ratio;
                state.last_eps = Some(eps);
                eps
            } else {
                state.last_eps.unwrap_or(floor)
            }
        }
    };
    let root = (2.0 * eps).sqrt();
    let data = x
        .data()
        .iter()
        .zip(s.data())
        .zip(&z)
        .map(|((xi, si), zi)| xi + si * eps + zi * root)
        .collect();
    Ok(ComplexGrid::from_parts_unchecked(
        x.height(),
        x.width(),
        x.domain(),
        data,
    ))
}

/// How measured samples override generated ones.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DcMode {
    /// Sampled pixels take the measured value exactly.
    #[default]
    Hard,
    /// Sampled pixels become `(y + lambda x_gen) / (1 + lambda)`.
    Soft(f64),
}

impl DcMode {
    pub(crate) fn validate(self) -> Result<()> {
        match self {
            DcMode::Hard => Ok(()),
            DcMode::Soft(l) if l > 0.0 && l.is_finite() => Ok(()),
            DcMode::Soft(l) => Err(Error::invalid(
                "recon",
                "dc_lambda",
                format!("must be positive, got {l}"),
            )),
        }
    }
}

pub(crate) fn dc_in_place(x: &mut [Complex64], y: &[Complex64], sampled: &[bool], mode: DcMode) {
    match mode {
        DcMode::Hard => {
            for ((xi, &yi), &m) in x.iter_mut().zip(y).zip(sampled) {
                if m {
                    *xi = yi;
                }
            }
        }
        DcMode::Soft(lambda) => {
            let denom = 1.0 + lambda;
            for ((xi, &yi), &m) in x.iter_mut().zip(y).zip(sampled) {
                if m {
                    *xi = (yi + *xi * lambda) / denom;
                }
            }
        }
    }
}

/// Projects a generated k-space estimate onto the measurements.
pub fn data_consistency(x_gen: &ComplexGrid, meas: &Measurement, mode: DcMode) -> Result<ComplexGrid> {
    mode.validate()?;
    x_gen.expect_shape("recon", "x_gen", meas.shape())?;
    let mut out = x_gen.clone();
    dc_in_place(out.data_mut(), meas.y.data(), meas.mask().data(), mode);
    Ok(out)
}

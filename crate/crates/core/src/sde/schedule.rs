use crate::error::{Error, Result};

pub const DEFAULT_SIGMA_MIN: f64 = 0.01;
pub const DEFAULT_SIGMA_MAX: f64 = 378.0;
pub const DEFAULT_LEVELS: usize = 1000;

/// Geometric noise ladder `sigma_i = sigma_min * (sigma_max / sigma_min)^(i / N)`,
/// `i = 0..=N`, for the variance-exploding SDE.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    sigma_min: f64,
    sigma_max: f64,
    sigmas: Vec<f64>,
}

pub fn make_schedule(sigma_min: f64, sigma_max: f64, levels: usize) -> Result<NoiseSchedule> {
    if !(sigma_min > 0.0 && sigma_min.is_finite()) {
        return Err(Error::invalid(
            "sde",
            "sigma_min",
            format!("must be positive, got {sigma_min}"),
        ));
    }
    if !(sigma_max > sigma_min && sigma_max.is_finite()) {
        return Err(Error::invalid(
            "sde",
            "sigma_max",
            format!("must exceed sigma_min={sigma_min}, got {sigma_max}"),
        ));
    }
    if levels == 0 {
        return Err(Error::invalid("sde", "levels", "need at least one step"));
    }
    let ratio = sigma_max / sigma_min;
    let mut sigmas: Vec<f64> = (0..=levels)
        .map(|i| sigma_min * ratio.powf(i as f64 / levels as f64))
        .collect();
    sigmas[0] = sigma_min;
    sigmas[levels] = sigma_max;
    Ok(NoiseSchedule {
        sigma_min,
        sigma_max,
        sigmas,
    })
}

impl NoiseSchedule {
    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// Number of steps `N`; there are `N + 1` noise levels.
    pub fn levels(&self) -> usize {
        self.sigmas.len() - 1
    }

    pub fn sigma(&self, i: usize) -> f64 {
        self.sigmas[i]
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }
}

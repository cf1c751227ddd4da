use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::ComplexGrid;

/// Source of standard normal draws, one `N(0, 1)` per real component.
///
/// Any random generator is a source; [`ZeroNoise`] pins every draw to zero
/// for deterministic checks of the update algebra.
pub trait NoiseSource {
    fn fill_standard_normal(&mut self, out: &mut [Complex64]);
}

impl<R: RngCore> NoiseSource for R {
    fn fill_standard_normal(&mut self, out: &mut [Complex64]) {
        for z in out {
            let re: f64 = self.sample(StandardNormal);
            let im: f64 = self.sample(StandardNormal);
            *z = Complex64::new(re, im);
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn fill_standard_normal(&mut self, out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
    }
}

pub(crate) fn draw_like(x: &ComplexGrid, noise: &mut dyn NoiseSource) -> Vec<Complex64> {
    let mut z = vec![Complex64::new(0.0, 0.0); x.len()];
    noise.fill_standard_normal(&mut z);
    z
}

/// `x + sigma * z` with `z` standard normal per real component.
pub fn perturb(x: &ComplexGrid, sigma: f64, noise: &mut dyn NoiseSource) -> Result<ComplexGrid> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(
            "sde",
            "sigma",
            format!("must be non-negative, got {sigma}"),
        ));
    }
    if sigma == 0.0 {
        return Ok(x.clone());
    }
    let z = draw_like(x, noise);
    let data = x.data().iter().zip(&z).map(|(a, b)| a + b * sigma).collect();
    ComplexGrid::new(x.height(), x.width(), x.domain(), data)
}

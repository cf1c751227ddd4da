use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, ComplexGrid, RealGrid};
use crate::masks::WeightMatrix;

/// Score function `s(x, sigma) ~ grad_x log p_sigma(x)`.
///
/// Implementations are evaluated concurrently from several reconstructions,
/// so they must be read-only.
pub trait ScoreProvider: Send + Sync {
    fn label(&self) -> &str;

    /// Output has the shape and domain of `x`.
    fn score(&self, x: &ComplexGrid, sigma: f64) -> Result<ComplexGrid>;
}

impl<P: ScoreProvider + ?Sized> ScoreProvider for Box<P> {
    fn label(&self) -> &str {
        (**self).label()
    }

    fn score(&self, x: &ComplexGrid, sigma: f64) -> Result<ComplexGrid> {
        (**self).score(x, sigma)
    }
}

impl<P: ScoreProvider + ?Sized> ScoreProvider for std::sync::Arc<P> {
    fn label(&self) -> &str {
        (**self).label()
    }

    fn score(&self, x: &ComplexGrid, sigma: f64) -> Result<ComplexGrid> {
        (**self).score(x, sigma)
    }
}

/// Always returns zero.
#[derive(Debug, Clone)]
pub struct ZeroScore {
    label: String,
}

impl ZeroScore {
    pub fn new(label: impl Into<String>) -> Self {
        Self { label: label.into() }
    }
}

impl Default for ZeroScore {
    fn default() -> Self {
        Self::new("zero")
    }
}

impl ScoreProvider for ZeroScore {
    fn label(&self) -> &str {
        &self.label
    }

    fn score(&self, x: &ComplexGrid, _sigma: f64) -> Result<ComplexGrid> {
        Ok(ComplexGrid::zeros(x.height(), x.width(), x.domain()))
    }
}

/// Wraps a closure as a provider.
pub struct FnScore<F> {
    label: String,
    f: F,
}

impl<F> FnScore<F>
where
    F: Fn(&ComplexGrid, f64) -> ComplexGrid + Send + Sync,
{
    pub fn new(label: impl Into<String>, f: F) -> Self {
        Self { label: label.into(), f }
    }
}

impl<F> ScoreProvider for FnScore<F>
where
    F: Fn(&ComplexGrid, f64) -> ComplexGrid + Send + Sync,
{
    fn label(&self) -> &str {
        &self.label
    }

    fn score(&self, x: &ComplexGrid, sigma: f64) -> Result<ComplexGrid> {
        Ok((self.f)(x, sigma))
    }
}

/// Independent Gaussian per real component: `Re x, Im x ~ N(Re mu, v)`, `N(Im mu, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    mean: ComplexGrid,
    variance: RealGrid,
}

impl GaussianPrior {
    pub fn new(mean: ComplexGrid, variance: RealGrid) -> Result<Self> {
        variance.expect_shape("sde", "variance", mean.shape())?;
        if let Some(v) = variance.data().iter().find(|&&v| v <= 0.0) {
            return Err(Error::invalid(
                "sde",
                "variance",
                format!("must be positive, found {v}"),
            ));
        }
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> &ComplexGrid {
        &self.mean
    }

    pub fn variance(&self) -> &RealGrid {
        &self.variance
    }

    pub fn shape(&self) -> (usize, usize) {
        self.mean.shape()
    }

    /// Distribution of `w * x` for `x` drawn from this prior.
    pub fn weighted(&self, w: &WeightMatrix) -> Result<Self> {
        let mean = crate::masks::apply_weight(&self.mean, w)?;
        let variance = RealGrid::new(
            self.variance.height(),
            self.variance.width(),
            self.variance
                .data()
                .iter()
                .zip(w.values().data())
                .map(|(&v, &s)| v * s * s)
                .collect(),
        )?;
        Self::new(mean, variance)
    }

    /// Distribution of `m * x` on the mask support. Off the support the mean
    /// is zero and the variance is left unchanged; those pixels are never
    /// written back by a masked slot.
    pub fn masked(&self, m: &BinaryMask) -> Result<Self> {
        Self::new(m.apply(&self.mean)?, self.variance.clone())
    }

    /// Log density of `N(mu, v + sigma^2)`, summed over all real components.
    pub fn log_density(&self, x: &ComplexGrid, sigma: f64) -> f64 {
        let s2 = sigma * sigma;
        x.data()
            .iter()
            .zip(self.mean.data())
            .zip(self.variance.data())
            .map(|((z, m), &v)| {
                let var = v + s2;
                let d = z - m;
                -0.5 * (d.re * d.re + d.im * d.im) / var - (2.0 * std::f64::consts::PI * var).ln()
            })
            .sum()
    }
}

/// Exact score of the Gaussian prior under the variance-exploding kernel:
/// `-(x - mu) / (v + sigma^2)`.
pub fn gaussian_score(prior: &GaussianPrior, x: &ComplexGrid, sigma: f64) -> Result<ComplexGrid> {
    x.expect_shape("sde", "x", prior.shape())?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(
            "sde",
            "sigma",
            format!("must be non-negative, got {sigma}"),
        ));
    }
    let s2 = sigma * sigma;
    let data: Vec<Complex64> = x
        .data()
        .iter()
        .zip(prior.mean.data())
        .zip(prior.variance.data())
        .map(|((z, m), &v)| -(z - m) / (v + s2))
        .collect();
    ComplexGrid::new(x.height(), x.width(), x.domain(), data)
}

/// [`gaussian_score`] as a labelled provider.
#[derive(Debug, Clone)]
pub struct GaussianScore {
    label: String,
    prior: GaussianPrior,
}

impl GaussianScore {
    pub fn new(label: impl Into<String>, prior: GaussianPrior) -> Self {
        Self {
            label: label.into(),
            prior,
        }
    }

    pub fn prior(&self) -> &GaussianPrior {
        &self.prior
    }
}

impl ScoreProvider for GaussianScore {
    fn label(&self) -> &str {
        &self.label
    }

    fn score(&self, x: &ComplexGrid, sigma: f64) -> Result<ComplexGrid> {
        gaussian_score(&self.prior, x, sigma)
    }
}

use rand::Rng;

use super::noise::draw_like;
use super::schedule::NoiseSchedule;
use super::score::ScoreProvider;
use crate::error::{Error, Result};
use crate::grid::ComplexGrid;

/// `lambda(sigma)` in the denoising score matching objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossWeighting {
    /// `lambda = sigma^2`, which makes every level's term O(1).
    #[default]
    SigmaSquared,
    Unit,
}

impl LossWeighting {
    fn at(self, sigma: f64) -> f64 {
        match self {
            LossWeighting::SigmaSquared => sigma * sigma,
            LossWeighting::Unit => 1.0,
        }
    }
}

/// Monte-Carlo denoising score matching loss.
///
/// For each of `k_mc` rounds and each sample `x0`: draw a level index
/// uniformly from `0..=N`, form `x = x0 + sigma z`, and accumulate
/// `lambda(sigma) * |s(x, sigma) + z / sigma|^2`. Returns the mean term.
pub fn dsm_loss<R: Rng>(
    provider: &dyn ScoreProvider,
    samples: &[ComplexGrid],
    schedule: &NoiseSchedule,
    weighting: LossWeighting,
    rng: &mut R,
    k_mc: usize,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("sde", "samples", "need at least one sample"));
    }
    if k_mc == 0 {
        return Err(Error::invalid("sde", "k_mc", "need at least one Monte-Carlo round"));
    }
    let mut total = 0.0;
    let mut terms = 0usize;
    for _ in 0..k_mc {
        for x0 in samples {
            let idx = rng.random_range(0..=schedule.levels());
            let sigma = schedule.sigma(idx);
            let z = draw_like(x0, &mut *rng);
            let data = x0.data().iter().zip(&z).map(|(a, b)| a + b * sigma).collect();
            let xt = ComplexGrid::new(x0.height(), x0.width(), x0.domain(), data)?;
            let s = provider.score(&xt, sigma)?;
            xt.expect_shape("sde", "score", s.shape())?;
            let sq: f64 = s
                .data()
                .iter()
                .zip(&z)
                .map(|(si, zi)| (si + zi / sigma).norm_sqr())
                .sum();
            if !sq.is_finite() {
                return Err(Error::NonFiniteScore {
                    module: "sde",
                    label: provider.label().to_string(),
                });
            }
            total += weighting.at(sigma) * sq;
            terms += 1;
        }
    }
    Ok(total / terms as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Domain, RealGrid};
    use crate::sde::schedule::make_schedule;
    use crate::sde::score::{GaussianPrior, GaussianScore, ZeroScore};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn prior(v: f64) -> GaussianPrior {
        let mean = ComplexGrid::from_fn(4, 4, Domain::KSpace, |r, c| Complex64::new(r as f64, -(c as f64))).unwrap();
        GaussianPrior::new(mean, RealGrid::new(4, 4, vec![v; 16]).unwrap()).unwrap()
    }

    #[test]
    fn exact_kernel_score_has_near_zero_loss() {
        let p = prior(1e-12);
        let provider = GaussianScore::new("oracle", p.clone());
        let sched = make_schedule(0.01, 50.0, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let loss = dsm_loss(
            &provider,
            &[p.mean().clone()],
            &sched,
            LossWeighting::SigmaSquared,
            &mut rng,
            200,
        )
        .unwrap();
        assert!(loss < 1e-6, "loss {loss}");
    }

    #[test]
    fn zero_provider_loss_is_component_count() {
        // sigma^2 * |z / sigma|^2 = |z|^2, whose mean is 2 * h * w.
        let p = prior(1.0);
        let sched = make_schedule(0.01, 50.0, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 4000;
        let loss = dsm_loss(
            &ZeroScore::default(),
            &[p.mean().clone()],
            &sched,
            LossWeighting::SigmaSquared,
            &mut rng,
            n,
        )
        .unwrap();
        let expected = 32.0;
        // |z|^2 ~ chi^2_32 has sd 8; 5 standard errors.
        assert!((loss - expected).abs() < 5.0 * 8.0 / (n as f64).sqrt(), "loss {loss}");
    }

    #[test]
    fn true_score_beats_offset_corruptions() {
        let p = prior(0.5);
        let sched = make_schedule(0.01, 10.0, 50).unwrap();
        let mut data_rng = ChaCha8Rng::seed_from_u64(3);
        // Samples from the prior itself.
        let samples: Vec<ComplexGrid> = (0..64)
            .map(|_| crate::sde::noise::perturb(p.mean(), 0.5f64.sqrt(), &mut data_rng).unwrap())
            .collect();
        let exact = GaussianScore::new("exact", p.clone());
        let base = dsm_loss(
            &exact,
            &samples,
            &sched,
            LossWeighting::SigmaSquared,
            &mut ChaCha8Rng::seed_from_u64(4),
            20,
        )
        .unwrap();
        for k in 0..5 {
            let off = Complex64::new(0.3 * (k as f64 + 1.0), -0.2);
            let shifted_mean = ComplexGrid::from_fn(4, 4, Domain::KSpace, |r, c| p.mean().get(r, c) + off).unwrap();
            let wrong = GaussianScore::new(
                "offset",
                GaussianPrior::new(shifted_mean, p.variance().clone()).unwrap(),
            );
            let loss = dsm_loss(
                &wrong,
                &samples,
                &sched,
                LossWeighting::SigmaSquared,
                &mut ChaCha8Rng::seed_from_u64(4),
                20,
            )
            .unwrap();
            assert!(loss > base, "offset {k}: {loss} <= {base}");
        }
    }

    #[test]
    fn rejects_empty_inputs() {
        let sched = make_schedule(0.01, 1.0, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(dsm_loss(&ZeroScore::default(), &[], &sched, LossWeighting::Unit, &mut rng, 1).is_err());
        let x = ComplexGrid::zeros(2, 2, Domain::KSpace);
        assert!(dsm_loss(&ZeroScore::default(), &[x], &sched, LossWeighting::Unit, &mut rng, 0).is_err());
    }
}

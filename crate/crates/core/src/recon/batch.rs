use num_complex::Complex64;

use super::engine::{reconstruct, ReconResult};
use super::slots::ReconConfig;
use crate::error::{Error, Result};
use crate::grid::{sos_combine, CoilStack, ComplexGrid, Domain, RealGrid};
use crate::sampling::Measurement;
use crate::sde::GaussianPrior;

pub const THREADS_ENV: &str = "KDIFF_THREADS";

/// Worker count: `KDIFF_THREADS` if set to a positive integer, else the
/// available parallelism.
pub fn thread_cap() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Seed for job `k` of a batch started from `base` (splitmix64 finalizer).
pub fn derive_seed(base: u64, k: u64) -> u64 {
    let mut z = base.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `jobs` independent closures on up to `threads` workers, results in job order.
pub(crate) fn run_jobs<T, F>(jobs: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let threads = threads.clamp(1, jobs.max(1));
    if threads == 1 {
        return (0..jobs).map(&f).collect();
    }
    let mut slots: Vec<Option<Result<T>>> = (0..jobs).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let f = &f;
                scope.spawn(move || (t..jobs).step_by(threads).map(|j| (j, f(j))).collect::<Vec<_>>())
            })
            .collect();
        for h in handles {
            for (j, r) in h.join().expect("reconstruction worker panicked") {
                slots[j] = Some(r);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("job not run")).collect()
}

/// `count` reconstructions of one measurement, job `k` seeded with
/// `derive_seed(cfg.seed, k)`.
pub fn reconstruct_many(
    meas: &Measurement,
    cfg: &ReconConfig,
    count: usize,
    threads: usize,
) -> Result<Vec<ReconResult>> {
    if count == 0 {
        return Err(Error::invalid("recon", "samples", "need at least one reconstruction"));
    }
    run_jobs(count, threads, |k| {
        let mut job = cfg.clone();
        job.seed = derive_seed(cfg.seed, k as u64);
        reconstruct(meas, &job)
    })
}

/// Elementwise mean of reconstructed k-space.
pub fn mean_kspace(results: &[ReconResult]) -> Result<ComplexGrid> {
    let first = results
        .first()
        .ok_or_else(|| Error::invalid("recon", "samples", "nothing to average"))?;
    let (h, w) = first.kspace.shape();
    let mut acc = vec![Complex64::new(0.0, 0.0); h * w];
    for r in results {
        r.kspace.expect_shape("recon", "sample", (h, w))?;
        for (a, v) in acc.iter_mut().zip(r.kspace.data()) {
            *a += v;
        }
    }
    let n = results.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    ComplexGrid::new(h, w, Domain::KSpace, acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiCoilResult {
    pub coils: Vec<ReconResult>,
    /// Root-sum-of-squares of the per-coil images.
    pub sos: RealGrid,
}

/// Reconstructs each coil independently (coil `c` seeded with
/// `derive_seed(cfg.seed, c)`) and combines the images.
pub fn reconstruct_coils(coils: &[Measurement], cfg: &ReconConfig, threads: usize) -> Result<MultiCoilResult> {
    if coils.is_empty() {
        return Err(Error::invalid("recon", "coils", "need at least one coil"));
    }
    let results = run_jobs(coils.len(), threads, |c| {
        let mut job = cfg.clone();
        job.seed = derive_seed(cfg.seed, c as u64);
        reconstruct(&coils[c], &job)
    })?;
    let stack = CoilStack::new(results.iter().map(|r| r.image.clone()).collect())?;
    let sos = sos_combine(&stack)?;
    Ok(MultiCoilResult { coils: results, sos })
}

/// Closed-form posterior mean for a diagonal Gaussian prior observed
/// through `meas`: `(v y + s^2 mu) / (v + s^2)` on sampled pixels, `mu`
/// elsewhere, with `s` the measurement noise level.
pub fn gaussian_posterior_mean(prior: &GaussianPrior, meas: &Measurement) -> Result<ComplexGrid> {
    prior.mean().expect_shape("recon", "prior", meas.shape())?;
    let s2 = meas.noise_sd * meas.noise_sd;
    let (h, w) = meas.shape();
    let data = prior
        .mean()
        .data()
        .iter()
        .zip(prior.variance().data())
        .zip(meas.y.data())
        .zip(meas.mask().data())
        .map(|(((&mu, &v), &y), &m)| if m { (y * v + mu * s2) / (v + s2) } else { mu })
        .collect();
    ComplexGrid::new(h, w, Domain::KSpace, data)
}

/// `|a - b|_2 / |b|_2`.
pub fn relative_l2(a: &ComplexGrid, b: &ComplexGrid) -> Result<f64> {
    a.expect_shape("recon", "estimate", b.shape())?;
    let num: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.data().iter().map(|y| y.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::invalid("recon", "reference", "zero reference norm"));
    }
    Ok((num / den).sqrt())
}

//! Cartesian undersampling patterns and the forward operator `y = M(x + n)`.
//!
//! Acceleration is `R = h * w / popcount(mask)`. Every generator aims for the
//! target within [`ACCEL_TOLERANCE`] (relative) and records what it achieved.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::{center, BinaryMask, ComplexGrid, Domain};

/// Relative tolerance on achieved acceleration.
pub const ACCEL_TOLERANCE: f64 = 0.05;

const POISSON_BISECTION_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    Poisson2D,
    Random2D,
    Uniform,
}

impl PatternKind {
    pub fn name(self) -> &'static str {
        match self {
            PatternKind::Poisson2D => "poisson",
            PatternKind::Random2D => "random",
            PatternKind::Uniform => "uniform",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "poisson" | "poisson2d" => Some(PatternKind::Poisson2D),
            "random" | "random2d" => Some(PatternKind::Random2D),
            "uniform" => Some(PatternKind::Uniform),
            _ => None,
        }
    }
}

/// Which encoding direction uniform lines run along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineOrientation {
    #[default]
    Rows,
    Columns,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPattern {
    pub kind: PatternKind,
    pub mask: BinaryMask,
    pub target_r: f64,
    pub achieved_r: f64,
    pub acs: usize,
    pub seed: u64,
    /// Global radius scale found for Poisson-disc patterns.
    pub poisson_scale: Option<f64>,
}

impl SamplingPattern {
    pub fn within_tolerance(&self) -> bool {
        within_tolerance(self.achieved_r, self.target_r)
    }

    /// Wraps a mask read back from disk.
    pub fn from_mask(kind: PatternKind, mask: BinaryMask, target_r: f64, acs: usize, seed: u64) -> Result<Self> {
        let achieved_r = achieved_acceleration(&mask)?;
        Ok(Self {
            kind,
            mask,
            target_r,
            achieved_r,
            acs,
            seed,
            poisson_scale: None,
        })
    }
}

fn within_tolerance(achieved: f64, target: f64) -> bool {
    ((achieved - target) / target).abs() <= ACCEL_TOLERANCE
}

pub fn achieved_acceleration(mask: &BinaryMask) -> Result<f64> {
    let n = mask.popcount();
    if n == 0 {
        return Err(Error::invalid("sampling", "mask", "pattern samples nothing"));
    }
    Ok((mask.height() * mask.width()) as f64 / n as f64)
}

fn check_common(height: usize, width: usize, accel: f64, acs: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::invalid("sampling", "shape", "dimensions must be positive"));
    }
    if !(accel >= 1.0 && accel.is_finite()) {
        return Err(Error::invalid(
            "sampling",
            "accel",
            format!("must be >= 1, got {accel}"),
        ));
    }
    if acs > height.min(width) {
        return Err(Error::invalid(
            "sampling",
            "acs",
            format!("block {acs} does not fit a {height}x{width} grid"),
        ));
    }
    Ok(())
}

/// Fully sampled `acs x acs` block about the center.
pub fn acs_block(height: usize, width: usize, acs: usize) -> BinaryMask {
    let (r0, c0) = center(height, width);
    let (top, left) = (r0 - acs / 2, c0 - acs / 2);
    BinaryMask::from_fn(height, width, |r, c| {
        acs > 0 && (top..top + acs).contains(&r) && (left..left + acs).contains(&c)
    })
}

/// Evenly spaced full lines plus the ACS block.
///
/// The line count is chosen so the achieved acceleration (including the ACS
/// block) is closest to `accel`; lines sit at `offset + round(k * n / count)`,
/// which is exactly every `n / count`-th line when that ratio is integral.
/// A pattern that misses the tolerance is still returned; check
/// [`SamplingPattern::within_tolerance`].
pub fn gen_uniform(
    height: usize,
    width: usize,
    accel: f64,
    acs: usize,
    offset: usize,
    orientation: LineOrientation,
) -> Result<SamplingPattern> {
    check_common(height, width, accel, acs)?;
    let acs_mask = acs_block(height, width, acs);
    let n_lines = match orientation {
        LineOrientation::Rows => height,
        LineOrientation::Columns => width,
    };

    let mut best: Option<(f64, BinaryMask)> = None;
    for count in 1..=n_lines {
        let mut on = vec![false; n_lines];
        for k in 0..count {
            let pos = (2 * k * n_lines + count) / (2 * count);
            on[(offset + pos) % n_lines] = true;
        }
        let lines = BinaryMask::from_fn(height, width, |r, c| match orientation {
            LineOrientation::Rows => on[r],
            LineOrientation::Columns => on[c],
        });
        let mask = lines.union(&acs_mask);
        let achieved = achieved_acceleration(&mask)?;
        let err = (achieved - accel).abs();
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, mask));
        }
    }
    let (_, mask) = best.expect("at least one line count");
    let achieved_r = achieved_acceleration(&mask)?;
    Ok(SamplingPattern {
        kind: PatternKind::Uniform,
        mask,
        target_r: accel,
        achieved_r,
        acs,
        seed: offset as u64,
        poisson_scale: None,
    })
}

fn sample_budget(height: usize, width: usize, accel: f64, acs_count: usize, kind: &'static str) -> Result<usize> {
    let total = (height * width) as f64;
    let target = (total / accel).round().max(1.0) as usize;
    if acs_count > 0 && !within_tolerance(total / acs_count as f64, accel) && acs_count > target {
        return Err(Error::invalid(
            "sampling",
            "acs",
            format!(
                "{kind}: ACS block alone ({acs_count} samples, R={:.3}) exceeds the budget for R={accel}",
                total / acs_count as f64
            ),
        ));
    }
    Ok(target.saturating_sub(acs_count))
}

/// Pointwise random selection outside the ACS block.
///
/// Every free pixel draws one uniform variate from the seeded stream; the
/// selection threshold is the order statistic that makes the total sample
/// count equal `round(h * w / R)`.
pub fn gen_random2d(height: usize, width: usize, accel: f64, acs: usize, seed: u64) -> Result<SamplingPattern> {
    check_common(height, width, accel, acs)?;
    let mut mask = acs_block(height, width, acs);
    let acs_count = mask.popcount();
    let extra = sample_budget(height, width, accel, acs_count, "random")?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws: Vec<(f64, usize)> = Vec::with_capacity(height * width);
    for (i, &fixed) in mask.data().iter().enumerate() {
        let u: f64 = rng.random();
        if !fixed {
            draws.push((u, i));
        }
    }
    draws.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for &(_, i) in draws.iter().take(extra) {
        mask.set(i / width, i % width, true);
    }
    let achieved_r = achieved_acceleration(&mask)?;
    if !within_tolerance(achieved_r, accel) {
        return Err(Error::AccelerationUnreachable {
            kind: "random",
            target: accel,
            achieved: achieved_r,
        });
    }
    Ok(SamplingPattern {
        kind: PatternKind::Random2D,
        mask,
        target_r: accel,
        achieved_r,
        acs,
        seed,
        poisson_scale: None,
    })
}

/// Density falloff length for the variable-density Poisson disc.
pub fn poisson_sigma(height: usize, width: usize) -> f64 {
    height.min(width) as f64 / 6.0
}

/// Minimum spacing enforced around `(row, col)` for a given global scale.
pub fn poisson_local_radius(height: usize, width: usize, scale: f64, row: usize, col: usize) -> f64 {
    let (r0, c0) = center(height, width);
    let dr = row as f64 - r0 as f64;
    let dc = col as f64 - c0 as f64;
    scale * (1.0 + (dr * dr + dc * dc).sqrt() / poisson_sigma(height, width))
}

/// Dart throwing over a fixed candidate order. A candidate is accepted when
/// no earlier accepted sample lies within its local radius.
fn poisson_darts(height: usize, width: usize, order: &[usize], scale: f64) -> Vec<bool> {
    let mut accepted = vec![false; height * width];
    for &idx in order {
        let (row, col) = (idx / width, idx % width);
        let rad = poisson_local_radius(height, width, scale, row, col);
        let reach = rad.ceil() as usize;
        let r_lo = row.saturating_sub(reach);
        let r_hi = (row + reach).min(height - 1);
        let c_lo = col.saturating_sub(reach);
        let c_hi = (col + reach).min(width - 1);
        let rad_sq = rad * rad;
        let mut free = true;
        'scan: for r in r_lo..=r_hi {
            for c in c_lo..=c_hi {
                if accepted[r * width + c] {
                    let dr = r as f64 - row as f64;
                    let dc = c as f64 - col as f64;
                    if dr * dr + dc * dc < rad_sq {
                        free = false;
                        break 'scan;
                    }
                }
            }
        }
        if free {
            accepted[idx] = true;
        }
    }
    accepted
}

/// Variable-density Poisson-disc pattern.
///
/// The local radius grows linearly with distance from the k-space center,
/// `scale * (1 + d / sigma)` with `sigma = min(h, w) / 6`. The global scale is
/// bisected until the sample count (ACS block included) hits the target
/// acceleration. Candidates are visited in one seeded order for every trial
/// scale, so the result is a deterministic function of the inputs.
pub fn gen_poisson2d(height: usize, width: usize, accel: f64, acs: usize, seed: u64) -> Result<SamplingPattern> {
    check_common(height, width, accel, acs)?;
    let acs_mask = acs_block(height, width, acs);
    let acs_count = acs_mask.popcount();
    let extra = sample_budget(height, width, accel, acs_count, "poisson")?;

    let mut order: Vec<usize> = (0..height * width).filter(|&i| !acs_mask.data()[i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let total = (height * width) as f64;
    let evaluate = |scale: f64| {
        let darts = poisson_darts(height, width, &order, scale);
        let count = darts.iter().filter(|&&b| b).count();
        (darts, count)
    };
    let r_of = |count: usize| total / (count + acs_count).max(1) as f64;

    let mut lo = 0.0f64;
    let mut hi = height.max(width) as f64;
    let (mut best_darts, mut best_count) = evaluate(lo);
    let mut best_scale = lo;
    if best_count > extra {
        for _ in 0..POISSON_BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let (darts, count) = evaluate(mid);
            if (r_of(count) - accel).abs() < (r_of(best_count) - accel).abs() {
                best_darts = darts;
                best_count = count;
                best_scale = mid;
            }
            if count == extra {
                break;
            }
            if count > extra {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    let achieved_r = r_of(best_count);
    if !within_tolerance(achieved_r, accel) {
        return Err(Error::AccelerationUnreachable {
            kind: "poisson",
            target: accel,
            achieved: achieved_r,
        });
    }
    let mut mask = acs_mask;
    for (i, _) in best_darts.iter().enumerate().filter(|(_, &b)| b) {
        mask.set(i / width, i % width, true);
    }
    Ok(SamplingPattern {
        kind: PatternKind::Poisson2D,
        mask,
        target_r: accel,
        achieved_r,
        acs,
        seed,
        poisson_scale: Some(best_scale),
    })
}

/// Dispatches on pattern kind. For uniform patterns `seed` is the line offset.
pub fn generate(
    kind: PatternKind,
    height: usize,
    width: usize,
    accel: f64,
    acs: usize,
    seed: u64,
) -> Result<SamplingPattern> {
    match kind {
        PatternKind::Poisson2D => gen_poisson2d(height, width, accel, acs, seed),
        PatternKind::Random2D => gen_random2d(height, width, accel, acs, seed),
        PatternKind::Uniform => gen_uniform(height, width, accel, acs, seed as usize, LineOrientation::Rows),
    }
}

/// Undersampled (and possibly noisy) k-space.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub y: ComplexGrid,
    pub pattern: SamplingPattern,
    pub noise_sd: f64,
}

impl Measurement {
    /// Pairs existing data with its pattern; `y` must vanish off the pattern.
    pub fn new(y: ComplexGrid, pattern: SamplingPattern, noise_sd: f64) -> Result<Self> {
        y.expect_domain("sampling", "measurement", Domain::KSpace)?;
        y.expect_shape("sampling", "measurement", pattern.mask.shape())?;
        if let Some(i) = y
            .data()
            .iter()
            .zip(pattern.mask.data())
            .position(|(z, &m)| !m && (z.re != 0.0 || z.im != 0.0))
        {
            return Err(Error::invalid(
                "sampling",
                "measurement",
                format!("nonzero value at unsampled index {i}"),
            ));
        }
        Ok(Self { y, pattern, noise_sd })
    }

    pub fn mask(&self) -> &BinaryMask {
        &self.pattern.mask
    }

    pub fn shape(&self) -> (usize, usize) {
        self.y.shape()
    }
}

/// `y = M * (x + n)` with `n` i.i.d. `N(0, noise_sd^2)` per real component.
///
/// Noise is drawn for every pixel in row-major order, so a given seed
/// yields the same noise field whatever the pattern.
pub fn apply_forward(x: &ComplexGrid, pattern: &SamplingPattern, noise_sd: f64, seed: u64) -> Result<Measurement> {
    x.expect_domain("sampling", "input", Domain::KSpace)?;
    x.expect_shape("sampling", "pattern", pattern.mask.shape())?;
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::invalid(
            "sampling",
            "noise_sd",
            format!("must be non-negative, got {noise_sd}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = Complex64::new(0.0, 0.0);
    let data = x
        .data()
        .iter()
        .zip(pattern.mask.data())
        .map(|(&z, &m)| {
            let noisy = if noise_sd > 0.0 {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                z + Complex64::new(re, im) * noise_sd
            } else {
                z
            };
            if m {
                noisy
            } else {
                zero
            }
        })
        .collect();
    let y = ComplexGrid::new(x.height(), x.width(), Domain::KSpace, data)?;
    Ok(Measurement {
        y,
        pattern: pattern.clone(),
        noise_sd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_kspace(h: usize, w: usize, seed: u64) -> ComplexGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexGrid::from_fn(h, w, Domain::KSpace, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .unwrap()
    }

    #[test]
    fn uniform_even_stride() {
        let p = gen_uniform(8, 8, 2.0, 0, 1, LineOrientation::Rows).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(p.mask.get(r, c), r % 2 == 1, "({r},{c})");
            }
        }
        assert_eq!(p.mask.popcount(), 32);
        assert_eq!(p.achieved_r, 2.0);
    }

    #[test]
    fn uniform_columns() {
        let p = gen_uniform(8, 8, 4.0, 0, 0, LineOrientation::Columns).unwrap();
        assert!((0..8).all(|r| p.mask.get(r, 0) && p.mask.get(r, 4) && !p.mask.get(r, 1)));
    }

    #[test]
    fn no_acceleration_is_full() {
        let p = gen_uniform(8, 8, 1.0 + 1e-9, 0, 0, LineOrientation::Rows).unwrap();
        assert_eq!(p.mask.popcount(), 64);
        let p = gen_random2d(8, 8, 1.0, 0, 3).unwrap();
        assert_eq!(p.mask.popcount(), 64);
        let p = gen_poisson2d(8, 8, 1.0, 0, 3).unwrap();
        assert_eq!(p.mask.popcount(), 64);
    }

    #[test]
    fn uniform_small_grid_with_acs() {
        let p = gen_uniform(16, 16, 4.0, 4, 0, LineOrientation::Rows).unwrap();
        // popcount oracle
        let count = p.mask.data().iter().filter(|&&b| b).count();
        let r = 256.0 / count as f64;
        assert!((3.8..=4.2).contains(&r), "achieved {r}");
        assert!(p.within_tolerance());
    }

    #[test]
    fn uniform_unreachable_is_reported() {
        // 64 rows cannot be split into R = 10 without help from an ACS block.
        let p = gen_uniform(64, 64, 10.0, 0, 0, LineOrientation::Rows).unwrap();
        assert!(!p.within_tolerance());
        assert_eq!(p.achieved_r, 4096.0 / p.mask.popcount() as f64);
    }

    #[test]
    fn random_is_deterministic_and_on_target() {
        let a = gen_random2d(64, 64, 8.0, 8, 7).unwrap();
        let b = gen_random2d(64, 64, 8.0, 8, 7).unwrap();
        assert_eq!(a, b);
        let r = 4096.0 / a.mask.data().iter().filter(|&&x| x).count() as f64;
        assert!((7.6..=8.4).contains(&r));
        assert!(acs_block(64, 64, 8).is_subset_of(&a.mask));
        assert_ne!(a.mask, gen_random2d(64, 64, 8.0, 8, 8).unwrap().mask);
    }

    #[test]
    fn random_rejects_oversized_acs() {
        assert!(gen_random2d(16, 16, 8.0, 12, 0).is_err());
        assert!(gen_random2d(16, 16, 8.0, 17, 0).is_err());
    }

    #[test]
    fn poisson_on_target_with_spacing() {
        let p = gen_poisson2d(64, 64, 6.0, 8, 1).unwrap();
        let r = 4096.0 / p.mask.popcount() as f64;
        assert!((5.7..=6.3).contains(&r), "achieved {r}");
        assert_eq!(p, gen_poisson2d(64, 64, 6.0, 8, 1).unwrap());
        assert!(acs_block(64, 64, 8).is_subset_of(&p.mask));

        // O(n^2) pairwise spacing check over non-ACS samples.
        let scale = p.poisson_scale.unwrap();
        let acs = acs_block(64, 64, 8);
        let pts: Vec<(usize, usize)> = (0..64)
            .flat_map(|r| (0..64).map(move |c| (r, c)))
            .filter(|&(r, c)| p.mask.get(r, c) && !acs.get(r, c))
            .collect();
        for (i, &(r1, c1)) in pts.iter().enumerate() {
            for &(r2, c2) in &pts[i + 1..] {
                let d = ((r1 as f64 - r2 as f64).powi(2) + (c1 as f64 - c2 as f64).powi(2)).sqrt();
                let lim = poisson_local_radius(64, 64, scale, r1, c1).min(poisson_local_radius(64, 64, scale, r2, c2));
                assert!(d >= lim, "({r1},{c1})-({r2},{c2}) d={d} < {lim}");
            }
        }
    }

    #[test]
    fn forward_noise_free_identity_and_masking() {
        let x = random_kspace(16, 16, 2);
        let full =
            SamplingPattern::from_mask(PatternKind::Random2D, BinaryMask::filled(16, 16, true), 1.0, 0, 0).unwrap();
        assert_eq!(apply_forward(&x, &full, 0.0, 0).unwrap().y, x);

        let mut single = BinaryMask::filled(16, 16, false);
        single.set(3, 5, true);
        let p = SamplingPattern::from_mask(PatternKind::Random2D, single, 256.0, 0, 0).unwrap();
        let y = apply_forward(&x, &p, 0.0, 0).unwrap().y;
        assert_eq!(y.data().iter().filter(|z| z.norm() != 0.0).count(), 1);

        let p = gen_random2d(16, 16, 3.0, 0, 9).unwrap();
        let m = apply_forward(&x, &p, 0.0, 0).unwrap();
        for r in 0..16 {
            for c in 0..16 {
                let want = if p.mask.get(r, c) {
                    x.get(r, c)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert_eq!(m.y.get(r, c), want);
            }
        }
    }

    #[test]
    fn forward_is_projection() {
        let x = random_kspace(16, 16, 4);
        let p = gen_poisson2d(16, 16, 3.0, 2, 4).unwrap();
        let once = apply_forward(&x, &p, 0.0, 0).unwrap();
        let twice = apply_forward(&once.y, &p, 0.0, 0).unwrap();
        assert_eq!(once.y, twice.y);
    }

    #[test]
    fn forward_noise_stays_on_pattern() {
        let x = random_kspace(16, 16, 5);
        let p = gen_random2d(16, 16, 4.0, 0, 5).unwrap();
        let m = apply_forward(&x, &p, 0.5, 77).unwrap();
        assert!(Measurement::new(m.y.clone(), p.clone(), 0.5).is_ok());
        assert!(m.y.data().iter().zip(p.mask.data()).all(|(z, &s)| s || z.norm() == 0.0));
        assert!(apply_forward(&x, &p, -1.0, 0).is_err());
        assert!(apply_forward(&random_kspace(8, 16, 0), &p, 0.0, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn generators_reproducible_and_keep_acs(
            seed in any::<u64>(), accel in 2.0f64..6.0, acs in 0usize..6, kind in 0usize..3,
        ) {
            let kind = [PatternKind::Poisson2D, PatternKind::Random2D, PatternKind::Uniform][kind];
            let a = generate(kind, 32, 32, accel, acs, seed % 1000);
            let b = generate(kind, 32, 32, accel, acs, seed % 1000);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(&a, &b);
                    prop_assert!(acs_block(32, 32, acs).is_subset_of(&a.mask));
                    if kind != PatternKind::Uniform {
                        prop_assert!(a.within_tolerance());
                    }
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "nondeterministic outcome"),
            }
        }
    }
}

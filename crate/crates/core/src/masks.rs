//! K-space weighting and virtual binary masks.
//!
//! The weighting `w(u, v) = max(eps, (r*du^2 + r*dv^2)^p)` rebalances low and
//! high frequencies for the structure model; the virtual masks select the
//! k-space regions the detail models work on.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{offset_from_center, BinaryMask, ComplexGrid, Domain, RealGrid};

pub const DEFAULT_WEIGHT_R: f64 = 0.075;
pub const DEFAULT_WEIGHT_P: f64 = 0.5;
pub const DEFAULT_WEIGHT_EPS: f64 = 1e-6;

/// Positive per-pixel k-space weighting.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    r: f64,
    p: f64,
    eps: f64,
    values: RealGrid,
}

impl WeightMatrix {
    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn values(&self) -> &RealGrid {
        &self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values.get(row, col)
    }

    /// Rebuilds a weight matrix from stored values (e.g. read back from disk).
    pub fn from_values(values: RealGrid, r: f64, p: f64, eps: f64) -> Result<Self> {
        if let Some(v) = values.data().iter().find(|&&v| v < eps || v <= 0.0) {
            return Err(Error::invalid("masks", "weight", format!("value {v} below eps {eps}")));
        }
        Ok(Self { r, p, eps, values })
    }
}

pub fn make_weight(height: usize, width: usize, r: f64, p: f64, eps: f64) -> Result<WeightMatrix> {
    if height == 0 || width == 0 {
        return Err(Error::invalid("masks", "shape", "dimensions must be positive"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid("masks", "r", format!("must be positive, got {r}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("masks", "eps", format!("must be positive, got {eps}")));
    }
    if !(p >= 0.0 && p.is_finite()) {
        return Err(Error::invalid(
            "masks",
            "p",
            format!("must be finite and non-negative, got {p}"),
        ));
    }
    let values = RealGrid::from_fn(height, width, |row, col| {
        let (du, dv) = offset_from_center(height, width, row, col);
        (r * (du * du + dv * dv)).powf(p).max(eps)
    })?;
    Ok(WeightMatrix { r, p, eps, values })
}

/// `w * x`, elementwise.
pub fn apply_weight(x: &ComplexGrid, w: &WeightMatrix) -> Result<ComplexGrid> {
    x.expect_shape("masks", "weight", w.shape())?;
    let data = x.data().iter().zip(w.values.data()).map(|(z, &s)| z * s).collect();
    ComplexGrid::new(x.height(), x.width(), x.domain(), data)
}

/// `x / w`, elementwise; inverse of [`apply_weight`].
pub fn unweight(x: &ComplexGrid, w: &WeightMatrix) -> Result<ComplexGrid> {
    x.expect_shape("masks", "weight", w.shape())?;
    let data = x.data().iter().zip(w.values.data()).map(|(z, &s)| z / s).collect();
    ComplexGrid::new(x.height(), x.width(), x.domain(), data)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaskShape {
    Circle {
        diameter: f64,
    },
    Radial {
        spokes: usize,
        spoke_width: f64,
        inner_diameter: f64,
    },
    Random {
        coverage: f64,
        block: usize,
        seed: u64,
    },
}

impl MaskShape {
    pub fn name(&self) -> &'static str {
        match self {
            MaskShape::Circle { .. } => "circle",
            MaskShape::Radial { .. } => "radial",
            MaskShape::Random { .. } => "random",
        }
    }
}

/// A virtual binary mask together with the geometry that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualMask {
    shape: MaskShape,
    complemented: bool,
    mask: BinaryMask,
}

impl VirtualMask {
    pub fn shape(&self) -> &MaskShape {
        &self.shape
    }

    pub fn mask(&self) -> &BinaryMask {
        &self.mask
    }

    pub fn dims(&self) -> (usize, usize) {
        self.mask.shape()
    }

    pub fn is_complemented(&self) -> bool {
        self.complemented
    }

    /// Swaps support and background, keeping the generating geometry.
    pub fn complement(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            complemented: !self.complemented,
            mask: self.mask.complement(),
        }
    }

    /// Wraps an arbitrary mask (e.g. one read from disk) as a circle-less
    /// virtual mask; the geometry is recorded as a zero-diameter circle.
    pub fn from_mask(mask: BinaryMask) -> Self {
        Self {
            shape: MaskShape::Circle { diameter: 0.0 },
            complemented: false,
            mask,
        }
    }

    pub fn apply(&self, x: &ComplexGrid) -> Result<ComplexGrid> {
        self.mask.apply(x)
    }
}

fn disc(height: usize, width: usize, diameter: f64) -> BinaryMask {
    let radius_sq = (diameter / 2.0) * (diameter / 2.0);
    BinaryMask::from_fn(height, width, |row, col| {
        let (du, dv) = offset_from_center(height, width, row, col);
        du * du + dv * dv < radius_sq
    })
}

/// Disc of diameter `a` about the grid center (strict `d < a / 2`).
pub fn make_circle_mask(height: usize, width: usize, diameter: f64) -> Result<VirtualMask> {
    if height == 0 || width == 0 {
        return Err(Error::invalid("masks", "shape", "dimensions must be positive"));
    }
    if !(diameter > 0.0 && diameter.is_finite()) {
        return Err(Error::invalid(
            "masks",
            "diameter",
            format!("must be positive, got {diameter}"),
        ));
    }
    Ok(VirtualMask {
        shape: MaskShape::Circle { diameter },
        complemented: false,
        mask: disc(height, width, diameter),
    })
}

/// Inner disc plus `spokes` full-length lines through the center at angles
/// `k * pi / spokes`. A pixel belongs to a spoke when its perpendicular
/// distance to the line is below `spoke_width / 2`.
pub fn make_radial_mask(
    height: usize,
    width: usize,
    spokes: usize,
    spoke_width: f64,
    inner_diameter: f64,
) -> Result<VirtualMask> {
    if height == 0 || width == 0 {
        return Err(Error::invalid("masks", "shape", "dimensions must be positive"));
    }
    if spokes == 0 {
        return Err(Error::invalid("masks", "spokes", "need at least one spoke"));
    }
    if !(spoke_width > 0.0 && spoke_width.is_finite()) {
        return Err(Error::invalid(
            "masks",
            "spoke_width",
            format!("must be positive, got {spoke_width}"),
        ));
    }
    if !(inner_diameter >= 0.0 && inner_diameter.is_finite()) {
        return Err(Error::invalid(
            "masks",
            "inner_diameter",
            format!("must be non-negative, got {inner_diameter}"),
        ));
    }
    let half = spoke_width / 2.0;
    let directions: Vec<(f64, f64)> = (0..spokes)
        .map(|k| {
            let theta = k as f64 * std::f64::consts::PI / spokes as f64;
            (theta.sin(), theta.cos())
        })
        .collect();
    let inner = disc(height, width, inner_diameter);
    let mask = BinaryMask::from_fn(height, width, |row, col| {
        if inner.get(row, col) {
            return true;
        }
        // x runs along columns, y along rows.
        let (dy, dx) = offset_from_center(height, width, row, col);
        directions.iter().any(|&(s, c)| (dx * s - dy * c).abs() < half)
    });
    Ok(VirtualMask {
        shape: MaskShape::Radial {
            spokes,
            spoke_width,
            inner_diameter,
        },
        complemented: false,
        mask,
    })
}

fn block_cells(height: usize, width: usize, block: usize) -> Vec<(usize, usize)> {
    let rows = height.div_ceil(block);
    let cols = width.div_ceil(block);
    (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).collect()
}

fn fill_cell(mask: &mut BinaryMask, cell: (usize, usize), block: usize) -> usize {
    let (h, w) = mask.shape();
    let mut added = 0;
    for r in cell.0 * block..((cell.0 + 1) * block).min(h) {
        for c in cell.1 * block..((cell.1 + 1) * block).min(w) {
            if !mask.get(r, c) {
                mask.set(r, c, true);
                added += 1;
            }
        }
    }
    added
}

/// One random block mask; see [`make_random_masks`].
pub fn make_random_mask(height: usize, width: usize, coverage: f64, block: usize, seed: u64) -> Result<VirtualMask> {
    Ok(make_random_masks(height, width, &[coverage], block, seed)?.remove(0))
}

/// Mutually disjoint random block masks.
///
/// The grid is tiled into `block x block` cells (edge cells clipped). The
/// cells are shuffled once with the seeded generator and dealt out in order:
/// each mask takes cells until its population reaches its coverage target.
/// Masks drawn from one call never share a cell.
pub fn make_random_masks(
    height: usize,
    width: usize,
    coverages: &[f64],
    block: usize,
    seed: u64,
) -> Result<Vec<VirtualMask>> {
    if height == 0 || width == 0 {
        return Err(Error::invalid("masks", "shape", "dimensions must be positive"));
    }
    if block == 0 {
        return Err(Error::invalid("masks", "block", "must be at least 1"));
    }
    if coverages.is_empty() {
        return Err(Error::invalid("masks", "coverage", "no coverage targets given"));
    }
    for &cov in coverages {
        if !(cov > 0.0 && cov < 1.0) {
            return Err(Error::invalid(
                "masks",
                "coverage",
                format!("must lie in (0, 1), got {cov}"),
            ));
        }
    }
    let mut cells = block_cells(height, width, block);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cells.shuffle(&mut rng);

    let total = (height * width) as f64;
    let mut next = cells.into_iter();
    let mut out = Vec::with_capacity(coverages.len());
    for &cov in coverages {
        let target = (cov * total).ceil() as usize;
        let mut mask = BinaryMask::filled(height, width, false);
        let mut count = 0;
        while count < target {
            let cell = next.next().ok_or_else(|| {
                Error::invalid(
                    "masks",
                    "coverage",
                    format!("coverages {coverages:?} exceed the grid when kept disjoint"),
                )
            })?;
            count += fill_cell(&mut mask, cell, block);
        }
        out.push(VirtualMask {
            shape: MaskShape::Random {
                coverage: cov,
                block,
                seed,
            },
            complemented: false,
            mask,
        });
    }
    Ok(out)
}

/// Builds a mask from its geometry description.
pub fn build_mask(height: usize, width: usize, shape: &MaskShape) -> Result<VirtualMask> {
    match *shape {
        MaskShape::Circle { diameter } => make_circle_mask(height, width, diameter),
        MaskShape::Radial {
            spokes,
            spoke_width,
            inner_diameter,
        } => make_radial_mask(height, width, spokes, spoke_width, inner_diameter),
        MaskShape::Random { coverage, block, seed } => make_random_mask(height, width, coverage, block, seed),
    }
}

/// Real-valued view used for serializing weights and masks.
pub fn weight_as_grid(w: &WeightMatrix) -> ComplexGrid {
    w.values.to_complex(Domain::KSpace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn zero_exponent_is_identity_weight() {
        let w = make_weight(9, 6, 0.075, 0.0, 1e-6).unwrap();
        assert!(w.values().data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn center_is_clamped_to_eps() {
        let w = make_weight(8, 8, 0.075, 0.5, 1e-6).unwrap();
        assert_eq!(w.get(4, 4), 1e-6);
    }

    #[test]
    fn weight_at_offset_three_four() {
        // Direct scalar evaluation: (0.075 * (9 + 16))^0.5.
        let expected = (0.075f64 * 25.0).sqrt();
        assert!((expected - 1.369_306_393_762_915_2).abs() < 1e-15);
        let w = make_weight(16, 16, 0.075, 0.5, 1e-6).unwrap();
        assert_eq!(w.get(8 + 3, 8 + 4), expected);
        assert_eq!(w.get(8 - 3, 8 - 4), expected);
    }

    #[test]
    fn weight_parameter_validation() {
        assert!(make_weight(4, 4, 0.0, 0.5, 1e-6).is_err());
        assert!(make_weight(4, 4, -1.0, 0.5, 1e-6).is_err());
        assert!(make_weight(4, 4, 0.075, 0.5, 0.0).is_err());
        assert!(make_weight(4, 4, 0.075, -0.5, 1e-6).is_err());
    }

    #[test]
    fn weight_shape_mismatch() {
        let w = make_weight(4, 4, 0.075, 0.5, 1e-6).unwrap();
        let x = ComplexGrid::zeros(4, 5, Domain::KSpace);
        assert!(apply_weight(&x, &w).is_err());
        assert!(unweight(&x, &w).is_err());
    }

    #[test]
    fn weighting_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = make_weight(16, 16, 0.075, 0.5, 1e-6).unwrap();
        let x = ComplexGrid::from_fn(16, 16, Domain::KSpace, |_, _| {
            Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
        })
        .unwrap();
        let y = apply_weight(&x, &w).unwrap();
        let z = unweight(&x, &w).unwrap();
        for r in 0..16 {
            for c in 0..16 {
                let s = w.get(r, c);
                assert_eq!(y.get(r, c), Complex64::new(x.get(r, c).re * s, x.get(r, c).im * s));
                assert_eq!(z.get(r, c), Complex64::new(x.get(r, c).re / s, x.get(r, c).im / s));
            }
        }
        let back = unweight(&y, &w).unwrap();
        for (a, b) in back.data().iter().zip(x.data()) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
        }
    }

    #[test]
    fn unit_circle_on_odd_grid_is_center_pixel() {
        let m = make_circle_mask(9, 7, 1.0).unwrap();
        assert_eq!(m.mask().popcount(), 1);
        assert!(m.mask().get(4, 3));
    }

    #[test]
    fn huge_circle_is_full() {
        let (h, w) = (6usize, 10usize);
        let diag = ((h * h + w * w) as f64).sqrt();
        let m = make_circle_mask(h, w, 2.0 * diag).unwrap();
        assert_eq!(m.mask().popcount(), h * w);
    }

    #[test]
    fn circle_population_matches_lattice_count() {
        // Lattice points (du, dv) in [-4, 3]^2 with du^2 + dv^2 < 4.
        let mut count = 0;
        for du in -4i32..4 {
            for dv in -4i32..4 {
                if du * du + dv * dv < 4 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 9);
        assert_eq!(make_circle_mask(8, 8, 4.0).unwrap().mask().popcount(), count);
    }

    #[test]
    fn circle_rejects_non_positive_diameter() {
        assert!(make_circle_mask(8, 8, 0.0).is_err());
        assert!(make_circle_mask(8, 8, -2.0).is_err());
    }

    #[test]
    fn radial_cross_is_center_row_and_column() {
        let m = make_radial_mask(9, 9, 2, 1.0, 0.0).unwrap();
        let expected = BinaryMask::from_fn(9, 9, |r, c| r == 4 || c == 4);
        assert_eq!(m.mask(), &expected);
    }

    #[test]
    fn radial_wide_spokes_cover_grid() {
        let m = make_radial_mask(8, 8, 4, 40.0, 0.0).unwrap();
        assert_eq!(m.mask().popcount(), 64);
    }

    #[test]
    fn radial_rejects_bad_parameters() {
        assert!(make_radial_mask(8, 8, 0, 1.0, 2.0).is_err());
        assert!(make_radial_mask(8, 8, 4, 0.0, 2.0).is_err());
        assert!(make_radial_mask(8, 8, 4, 1.0, -1.0).is_err());
    }

    #[test]
    fn random_mask_is_deterministic_and_sized() {
        let a = make_random_mask(64, 64, 0.25, 8, 42).unwrap();
        let b = make_random_mask(64, 64, 0.25, 8, 42).unwrap();
        assert_eq!(a, b);
        let frac = a.mask().coverage();
        assert!((0.25..=0.25 + 64.0 / 4096.0).contains(&frac), "coverage {frac}");
    }

    #[test]
    fn random_mask_rejects_bad_coverage() {
        assert!(make_random_mask(8, 8, 0.0, 2, 1).is_err());
        assert!(make_random_mask(8, 8, 1.0, 2, 1).is_err());
        assert!(make_random_mask(8, 8, 0.5, 0, 1).is_err());
        assert!(make_random_masks(8, 8, &[0.6, 0.6], 2, 1).is_err());
    }

    #[test]
    fn random_masks_are_disjoint() {
        let ms = make_random_masks(32, 32, &[0.2, 0.3], 4, 9).unwrap();
        assert_eq!(ms[0].mask().intersection(ms[1].mask()).popcount(), 0);
    }

    #[test]
    fn complement_flips_support() {
        let m = make_circle_mask(8, 8, 4.0).unwrap();
        let c = m.complement();
        assert!(c.is_complemented());
        assert_eq!(c.mask().popcount(), 64 - 9);
        assert_eq!(c.complement().mask(), m.mask());
    }

    proptest! {
        #[test]
        fn weight_monotone_in_radius(h in 2usize..24, w in 2usize..24, p in 0.01f64..2.0) {
            let wm = make_weight(h, w, 0.075, p, 1e-6).unwrap();
            let mut pts: Vec<(f64, f64)> = (0..h).flat_map(|r| (0..w).map(move |c| (r, c)))
                .map(|(r, c)| {
                    let (du, dv) = offset_from_center(h, w, r, c);
                    (du * du + dv * dv, wm.get(r, c))
                })
                .collect();
            pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            for pair in pts.windows(2) {
                prop_assert!(pair[1].1 >= pair[0].1);
            }
        }

        #[test]
        fn nested_circles_nest(a1 in 0.5f64..10.0, extra in 0.01f64..10.0, h in 1usize..17, w in 1usize..17) {
            let small = make_circle_mask(h, w, a1).unwrap();
            let big = make_circle_mask(h, w, a1 + extra).unwrap();
            prop_assert!(small.mask().is_subset_of(big.mask()));
        }

        #[test]
        fn radial_contains_inner_disc(spokes in 1usize..8, width in 0.2f64..3.0, inner in 0.5f64..8.0) {
            let r = make_radial_mask(16, 16, spokes, width, inner).unwrap();
            let c = make_circle_mask(16, 16, inner).unwrap();
            prop_assert!(c.mask().is_subset_of(r.mask()));
        }
    }
}

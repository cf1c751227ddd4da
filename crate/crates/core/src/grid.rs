//! Grid containers shared by every stage of the pipeline.
//!
//! All grids are row-major. The k-space center of an `h x w` grid is
//! `(h / 2, w / 2)` (floor division), which is also where [`crate::fft::fft2c`]
//! places the zero frequency.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Which side of the Fourier transform a complex grid lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Image,
    KSpace,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Image => "image",
            Domain::KSpace => "kspace",
        }
    }
}

/// Grid center `(row, col)` using floor division.
pub fn center(height: usize, width: usize) -> (usize, usize) {
    (height / 2, width / 2)
}

/// Signed offset of `(row, col)` from the grid center.
#[inline]
pub(crate) fn offset_from_center(height: usize, width: usize, row: usize, col: usize) -> (f64, f64) {
    let (r0, c0) = center(height, width);
    (row as f64 - r0 as f64, col as f64 - c0 as f64)
}

fn check_dims(module: &'static str, height: usize, width: usize, len: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::invalid(
            module,
            "shape",
            format!("dimensions must be positive, got {height}x{width}"),
        ));
    }
    let expected = height
        .checked_mul(width)
        .ok_or_else(|| Error::invalid(module, "shape", format!("{height}x{width} overflows")))?;
    if expected != len {
        return Err(Error::invalid(
            module,
            "data",
            format!("length {len} does not match {height}x{width}"),
        ));
    }
    Ok(())
}

/// `h x w` complex grid tagged with its domain. Values are always finite
/// when built through the checked constructors.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    height: usize,
    width: usize,
    domain: Domain,
    data: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn new(height: usize, width: usize, domain: Domain, data: Vec<Complex64>) -> Result<Self> {
        check_dims("grid", height, width, data.len())?;
        if let Some(i) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("grid", "data", format!("non-finite value at index {i}")));
        }
        Ok(Self {
            height,
            width,
            domain,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, domain: Domain) -> Self {
        assert!(height > 0 && width > 0, "grid dimensions must be positive");
        Self {
            height,
            width,
            domain,
            data: vec![Complex64::new(0.0, 0.0); height * width],
        }
    }

    /// Builds a grid from `f(row, col)`. Non-finite values are rejected.
    pub fn from_fn(
        height: usize,
        width: usize,
        domain: Domain,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(height, width, domain, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Mutable access to the raw values. Callers are responsible for keeping
    /// them finite; [`ComplexGrid::is_finite`] re-checks.
    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.width + col] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Same values, relabelled domain.
    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    /// Euclidean norm over all `2 * h * w` real components.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn magnitude(&self) -> RealGrid {
        RealGrid {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|z| z.norm()).collect(),
        }
    }

    pub(crate) fn expect_shape(&self, module: &'static str, param: &str, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::ShapeMismatch {
                module,
                param: param.to_string(),
                expected: shape,
                actual: self.shape(),
            });
        }
        Ok(())
    }

    pub(crate) fn expect_domain(&self, module: &'static str, param: &str, domain: Domain) -> Result<()> {
        if self.domain != domain {
            return Err(Error::invalid(
                module,
                param,
                format!("expected {} domain, got {}", domain.name(), self.domain.name()),
            ));
        }
        Ok(())
    }

    pub(crate) fn from_parts_unchecked(height: usize, width: usize, domain: Domain, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(height * width, data.len());
        Self {
            height,
            width,
            domain,
            data,
        }
    }
}

/// `h x w` real grid: magnitude images, weights, and real-valued file payloads.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl RealGrid {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        check_dims("grid", height, width, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("grid", "data", format!("non-finite value at index {i}")));
        }
        Ok(Self { height, width, data })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Complex grid with these values as real parts.
    pub fn to_complex(&self, domain: Domain) -> ComplexGrid {
        ComplexGrid::from_parts_unchecked(
            self.height,
            self.width,
            domain,
            self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub(crate) fn expect_shape(&self, module: &'static str, param: &str, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::ShapeMismatch {
                module,
                param: param.to_string(),
                expected: shape,
                actual: self.shape(),
            });
        }
        Ok(())
    }
}

/// `{0, 1}` grid used both for the undersampling pattern and for virtual masks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, data: Vec<bool>) -> Result<Self> {
        check_dims("grid", height, width, data.len())?;
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, value: bool) -> Self {
        assert!(height > 0 && width > 0, "mask dimensions must be positive");
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(height > 0 && width > 0, "mask dimensions must be positive");
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self { height, width, data }
    }

    /// Interprets a real grid as a mask; every value must be exactly 0 or 1.
    pub fn from_real(grid: &RealGrid) -> Result<Self> {
        let mut data = Vec::with_capacity(grid.data().len());
        for (i, &v) in grid.data().iter().enumerate() {
            if v == 0.0 {
                data.push(false);
            } else if v == 1.0 {
                data.push(true);
            } else {
                return Err(Error::invalid(
                    "grid",
                    "mask",
                    format!("value {v} at index {i} is not 0 or 1"),
                ));
            }
        }
        Self::new(grid.height(), grid.width(), data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.width + col] = value;
    }

    pub fn popcount(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Fraction of pixels set.
    pub fn coverage(&self) -> f64 {
        self.popcount() as f64 / self.data.len() as f64
    }

    pub fn complement(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&b| !b).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a || b).collect(),
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a && b).collect(),
        }
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.shape() == other.shape() && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    pub fn to_real(&self) -> RealGrid {
        RealGrid {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    /// Elementwise `mask * x`.
    pub fn apply(&self, x: &ComplexGrid) -> Result<ComplexGrid> {
        x.expect_shape("grid", "mask", self.shape())?;
        let zero = Complex64::new(0.0, 0.0);
        let data = self
            .data
            .iter()
            .zip(x.data())
            .map(|(&m, &z)| if m { z } else { zero })
            .collect();
        Ok(ComplexGrid::from_parts_unchecked(
            self.height,
            self.width,
            x.domain(),
            data,
        ))
    }

    pub(crate) fn expect_shape(&self, module: &'static str, param: &str, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::ShapeMismatch {
                module,
                param: param.to_string(),
                expected: shape,
                actual: self.shape(),
            });
        }
        Ok(())
    }
}

/// Ordered set of per-coil grids sharing one shape and domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CoilStack {
    coils: Vec<ComplexGrid>,
}

impl CoilStack {
    pub fn new(coils: Vec<ComplexGrid>) -> Result<Self> {
        let first = coils
            .first()
            .ok_or_else(|| Error::invalid("grid", "coils", "coil stack is empty"))?;
        let (shape, domain) = (first.shape(), first.domain());
        for (i, c) in coils.iter().enumerate().skip(1) {
            c.expect_shape("grid", &format!("coil[{i}]"), shape)?;
            c.expect_domain("grid", &format!("coil[{i}]"), domain)?;
        }
        Ok(Self { coils })
    }

    pub fn coils(&self) -> &[ComplexGrid] {
        &self.coils
    }

    pub fn len(&self) -> usize {
        self.coils.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coils.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.coils[0].shape()
    }

    pub fn domain(&self) -> Domain {
        self.coils[0].domain()
    }
}

/// Root-sum-of-squares combination of coil magnitudes.
pub fn sos_combine(stack: &CoilStack) -> Result<RealGrid> {
    stack.coils[0].expect_domain("grid", "coils", Domain::Image)?;
    let (h, w) = stack.shape();
    let mut acc = vec![0.0f64; h * w];
    for coil in &stack.coils {
        for (a, z) in acc.iter_mut().zip(coil.data()) {
            *a += z.norm_sqr();
        }
    }
    RealGrid::new(h, w, acc.into_iter().map(f64::sqrt).collect())
}

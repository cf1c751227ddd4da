//! Centered, orthonormal 2-D DFT.
//!
//! Both domains put their origin at `(h / 2, w / 2)`; the transform is an
//! ifftshift, a plain DFT scaled by `1 / sqrt(h * w)`, then an fftshift.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, Domain};

/// Image to centered k-space.
pub fn fft2c(img: &ComplexGrid) -> Result<ComplexGrid> {
    img.expect_domain("fft", "input", Domain::Image)?;
    transform(img, FftDirection::Forward, Domain::KSpace)
}

/// Centered k-space back to image; exact inverse of [`fft2c`].
pub fn ifft2c(ksp: &ComplexGrid) -> Result<ComplexGrid> {
    ksp.expect_domain("fft", "input", Domain::KSpace)?;
    transform(ksp, FftDirection::Inverse, Domain::Image)
}

fn transform(input: &ComplexGrid, direction: FftDirection, out_domain: Domain) -> Result<ComplexGrid> {
    if !input.is_finite() {
        return Err(Error::invalid("fft", "input", "grid contains non-finite values"));
    }
    let (h, w) = input.shape();
    let (sh, sw) = (h / 2, w / 2);
    let src = input.data();

    // ifftshift: the centered origin moves to index 0.
    let mut buf: Vec<Complex64> = Vec::with_capacity(h * w);
    for r in 0..h {
        let row = (r + sh) % h;
        for c in 0..w {
            buf.push(src[row * w + (c + sw) % w]);
        }
    }

    fft_2d_in_place(&mut buf, h, w, direction);

    // fftshift back, with orthonormal scaling.
    let scale = 1.0 / ((h * w) as f64).sqrt();
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        let row = (r + h - sh) % h;
        for c in 0..w {
            out.push(buf[row * w + (c + w - sw) % w] * scale);
        }
    }
    Ok(ComplexGrid::from_parts_unchecked(h, w, out_domain, out))
}

fn fft_2d_in_place(buf: &mut [Complex64], h: usize, w: usize, direction: FftDirection) {
    let mut planner = FftPlanner::<f64>::new();

    let row_fft = planner.plan_fft(w, direction);
    let mut scratch = vec![Complex64::default(); row_fft.get_inplace_scratch_len()];
    for row in buf.chunks_exact_mut(w) {
        row_fft.process_with_scratch(row, &mut scratch);
    }

    let col_fft = planner.plan_fft(h, direction);
    scratch.resize(col_fft.get_inplace_scratch_len(), Complex64::default());
    let mut column = vec![Complex64::default(); h];
    for c in 0..w {
        for r in 0..h {
            column[r] = buf[r * w + c];
        }
        col_fft.process_with_scratch(&mut column, &mut scratch);
        for r in 0..h {
            buf[r * w + c] = column[r];
        }
    }
}

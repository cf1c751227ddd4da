//! Information content of masked k-space and set relations between masks.

use crate::error::{Error, Result};
use crate::grid::ComplexGrid;
use crate::masks::VirtualMask;

pub const DEFAULT_BINS: usize = 256;

/// Relative range below which magnitudes are treated as equal.
pub const CONSTANT_RTOL: f64 = 1e-12;

/// How the support of a second mask sits relative to the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relationship {
    /// `supp(m2) ⊆ supp(m1)`
    Contained,
    /// Overlapping, but `m2` escapes `m1`.
    Intersected,
    Disjoint,
}

impl Relationship {
    pub fn name(self) -> &'static str {
        match self {
            Relationship::Contained => "contained",
            Relationship::Intersected => "intersected",
            Relationship::Disjoint => "disjoint",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub e1: f64,
    pub e2: f64,
    pub total: f64,
    pub bins: usize,
    pub relationship: Relationship,
}

/// Shannon entropy (bits) of the magnitudes of `x` inside the mask support.
///
/// Magnitudes are min-max quantized into `bins` equal-width bins. A
/// population whose range is within `CONSTANT_RTOL` of its largest magnitude
/// counts as constant and lands in a single bin.
pub fn entropy(x: &ComplexGrid, m: &VirtualMask, bins: usize) -> Result<f64> {
    x.expect_shape("entropy", "mask", m.dims())?;
    if bins < 2 {
        return Err(Error::invalid(
            "entropy",
            "bins",
            format!("need at least 2, got {bins}"),
        ));
    }
    let mags: Vec<f64> = x
        .data()
        .iter()
        .zip(m.mask().data())
        .filter(|(_, &keep)| keep)
        .map(|(z, _)| z.norm())
        .collect();
    if mags.is_empty() {
        return Err(Error::invalid("entropy", "mask", "mask has no set pixels"));
    }
    Ok(histogram_entropy(&mags, bins))
}

fn histogram_entropy(values: &[f64], bins: usize) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let span = if span <= CONSTANT_RTOL * hi.abs().max(lo.abs()) {
        0.0
    } else {
        span
    };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = if span > 0.0 {
            (((v - lo) / span * bins as f64) as usize).min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    let n = values.len() as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    // A single occupied bin yields -1*log2(1) = -0.0.
    h.max(0.0)
}

pub fn relationship(m1: &VirtualMask, m2: &VirtualMask) -> Result<Relationship> {
    m2.mask().expect_shape("entropy", "mask", m1.dims())?;
    let (a, b) = (m1.mask().data(), m2.mask().data());
    let mut overlap = false;
    let mut escapes = false;
    for (&in1, &in2) in a.iter().zip(b) {
        if in2 {
            if in1 {
                overlap = true;
            } else {
                escapes = true;
            }
        }
    }
    Ok(if !escapes {
        Relationship::Contained
    } else if overlap {
        Relationship::Intersected
    } else {
        Relationship::Disjoint
    })
}

pub fn entropy_report(x: &ComplexGrid, m1: &VirtualMask, m2: &VirtualMask, bins: usize) -> Result<EntropyReport> {
    let e1 = entropy(x, m1, bins)?;
    let e2 = entropy(x, m2, bins)?;
    Ok(EntropyReport {
        e1,
        e2,
        total: e1 + e2,
        bins,
        relationship: relationship(m1, m2)?,
    })
}

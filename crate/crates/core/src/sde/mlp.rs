//! Dense score networks exchanged with external trainers.
//!
//! File layout (little-endian):
//!
//! ```text
//! "MLPS" | u32 version = 1 | u32 layer_count
//! layer_count x { u32 in_dim | u32 out_dim | u8 activation (0 relu, 1 tanh, 2 none) }
//! all weight matrices, f32, each out_dim x in_dim row-major
//! all bias vectors, f32
//! ```
//!
//! The network maps `[Re x (row-major), Im x (row-major), ln sigma]` to
//! `[Re s, Im s]`.

use std::path::{Path, PathBuf};

use num_complex::Complex64;

use super::score::ScoreProvider;
use crate::error::{Error, Result};
use crate::grid::ComplexGrid;

pub const MLP_MAGIC: [u8; 4] = *b"MLPS";
pub const MLP_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Identity => 2,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Tanh),
            2 => Some(Activation::Identity),
            _ => None,
        }
    }

    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Tanh => v.tanh(),
            Activation::Identity => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    /// `out_dim x in_dim`, row-major.
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl DenseLayer {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, &b)| {
                let acc = row.iter().zip(input).fold(b as f64, |acc, (&w, &x)| acc + w as f64 * x);
                self.activation.apply(acc)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpWeights {
    layers: Vec<DenseLayer>,
}

fn dim_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::MlpDimension {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

impl MlpWeights {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        Self::validate(&layers, Path::new("<memory>"))?;
        Ok(Self { layers })
    }

    fn validate(layers: &[DenseLayer], path: &Path) -> Result<()> {
        if layers.is_empty() {
            return Err(dim_err(path, "no layers"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.in_dim == 0 || l.out_dim == 0 {
                return Err(dim_err(path, format!("layer {i} has a zero dimension")));
            }
            if l.weights.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim {
                return Err(dim_err(
                    path,
                    format!("layer {i} parameter count does not match {}x{}", l.out_dim, l.in_dim),
                ));
            }
            if i > 0 && layers[i - 1].out_dim != l.in_dim {
                return Err(dim_err(
                    path,
                    format!(
                        "layer {i} takes {} inputs but layer {} emits {}",
                        l.in_dim,
                        i - 1,
                        layers[i - 1].out_dim
                    ),
                ));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::MlpNonFinite {
                    path: path.to_path_buf(),
                    layer: i,
                });
            }
        }
        let (first, last) = (&layers[0], &layers[layers.len() - 1]);
        if last.out_dim % 2 != 0 {
            return Err(dim_err(path, format!("output dimension {} is not 2*h*w", last.out_dim)));
        }
        if first.in_dim != last.out_dim + 1 {
            return Err(dim_err(
                path,
                format!(
                    "input dimension {} must be output dimension {} + 1",
                    first.in_dim, last.out_dim
                ),
            ));
        }
        Ok(())
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Number of pixels `h * w` the network scores.
    pub fn pixels(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim / 2
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut act = input.to_vec();
        for l in &self.layers {
            act = l.forward(&act);
        }
        act
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MLP_MAGIC);
        out.extend_from_slice(&MLP_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for l in &self.layers {
            out.extend_from_slice(&(l.in_dim as u32).to_le_bytes());
            out.extend_from_slice(&(l.out_dim as u32).to_le_bytes());
            out.push(l.activation.code());
        }
        for l in &self.layers {
            for w in &l.weights {
                out.extend_from_slice(&w.to_le_bytes());
            }
        }
        for l in &self.layers {
            for b in &l.bias {
                out.extend_from_slice(&b.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0, path };
        let magic = r.take::<4>()?;
        if magic != MLP_MAGIC {
            return Err(Error::BadMagic {
                path: path.to_path_buf(),
                found: magic,
                expected: MLP_MAGIC,
            });
        }
        let version = r.u32()?;
        if version != MLP_VERSION {
            return Err(Error::UnsupportedVersion {
                path: path.to_path_buf(),
                version,
            });
        }
        let count = r.u32()? as usize;
        // Each header entry is 9 bytes; reject counts the file cannot hold
        // before allocating.
        if count.saturating_mul(9) > bytes.len() {
            return Err(Error::Truncated {
                path: path.to_path_buf(),
                expected: 12 + count.saturating_mul(9),
                found: bytes.len(),
            });
        }
        let mut shapes = Vec::with_capacity(count);
        for i in 0..count {
            let in_dim = r.u32()? as usize;
            let out_dim = r.u32()? as usize;
            let code = r.take::<1>()?[0];
            let act = Activation::from_code(code)
                .ok_or_else(|| dim_err(path, format!("layer {i} has unknown activation code {code}")))?;
            shapes.push((in_dim, out_dim, act));
        }
        let params: usize = shapes
            .iter()
            .try_fold(0usize, |acc, &(i, o, _)| {
                i.checked_mul(o).and_then(|w| acc.checked_add(w)?.checked_add(o))
            })
            .ok_or_else(|| dim_err(path, "parameter count overflows"))?;
        let needed = params
            .checked_mul(4)
            .and_then(|b| b.checked_add(r.pos))
            .ok_or_else(|| dim_err(path, "parameter count overflows"))?;
        if bytes.len() < needed {
            return Err(Error::Truncated {
                path: path.to_path_buf(),
                expected: needed,
                found: bytes.len(),
            });
        }
        if bytes.len() > needed {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("{} trailing bytes", bytes.len() - needed),
            });
        }
        let mut layers: Vec<DenseLayer> = Vec::with_capacity(count);
        for &(in_dim, out_dim, activation) in &shapes {
            let weights = r.f32s(in_dim * out_dim)?;
            layers.push(DenseLayer {
                in_dim,
                out_dim,
                activation,
                weights,
                bias: Vec::new(),
            });
        }
        for l in &mut layers {
            l.bias = r.f32s(l.out_dim)?;
        }
        Self::validate(&layers, path)?;
        Ok(Self { layers })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl ByteReader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self.bytes.get(self.pos..end).ok_or_else(|| Error::Truncated {
            path: self.path.to_path_buf(),
            expected: end,
            found: self.bytes.len(),
        })?;
        self.pos = end;
        Ok(slice.try_into().expect("slice length"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take::<4>()?))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        (0..n).map(|_| Ok(f32::from_le_bytes(self.take::<4>()?))).collect()
    }
}

/// MLP score provider.
#[derive(Debug, Clone)]
pub struct MlpScore {
    label: String,
    source: PathBuf,
    weights: MlpWeights,
}

impl MlpScore {
    pub fn new(label: impl Into<String>, weights: MlpWeights) -> Self {
        Self {
            label: label.into(),
            source: PathBuf::from("<memory>"),
            weights,
        }
    }

    pub fn weights(&self) -> &MlpWeights {
        &self.weights
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    /// File the weights were loaded from.
    pub fn source(&self) -> &Path {
        &self.source
    }
}

pub fn load_mlp(path: impl AsRef<Path>) -> Result<MlpScore> {
    let path = path.as_ref();
    let weights = MlpWeights::read(path)?;
    Ok(MlpScore {
        label: format!("mlp:{}", path.display()),
        source: path.to_path_buf(),
        weights,
    })
}

/// Network input for grid `x` at noise level `sigma`.
pub fn mlp_input(x: &ComplexGrid, sigma: f64) -> Vec<f64> {
    let mut input = Vec::with_capacity(2 * x.len() + 1);
    input.extend(x.data().iter().map(|z| z.re));
    input.extend(x.data().iter().map(|z| z.im));
    input.push(sigma.ln());
    input
}

impl ScoreProvider for MlpScore {
    fn label(&self) -> &str {
        &self.label
    }

    fn score(&self, x: &ComplexGrid, sigma: f64) -> Result<ComplexGrid> {
        if x.len() != self.weights.pixels() {
            return Err(dim_err(
                &self.source,
                format!("network scores {} pixels, grid has {}", self.weights.pixels(), x.len()),
            ));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(
                "sde",
                "sigma",
                format!("mlp needs sigma > 0, got {sigma}"),
            ));
        }
        let out = self.weights.forward(&mlp_input(x, sigma));
        let n = x.len();
        let data: Vec<Complex64> = (0..n).map(|i| Complex64::new(out[i], out[n + i])).collect();
        ComplexGrid::new(x.height(), x.width(), x.domain(), data).map_err(|_| Error::NonFiniteScore {
            module: "sde",
            label: self.label.clone(),
        })
    }
}

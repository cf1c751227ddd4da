use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input failed a precondition.
    #[error("{module}: invalid {param}: {reason}")]
    Invalid {
        module: &'static str,
        param: String,
        reason: String,
    },

    #[error("{module}: shape mismatch for {param}: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        module: &'static str,
        param: String,
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("recon: non-finite iterate at level {level} in slot '{slot}'")]
    NonFiniteIterate { level: usize, slot: String },

    #[error("{module}: provider '{label}' returned a non-finite score")]
    NonFiniteScore { module: &'static str, label: String },

    #[error("sampling: {kind} pattern missed target R={target} (closest achieved R={achieved})")]
    AccelerationUnreachable {
        kind: &'static str,
        target: f64,
        achieved: f64,
    },

    #[error("io: {path}: bad magic {found:?}, expected {expected:?}")]
    BadMagic {
        path: PathBuf,
        found: [u8; 4],
        expected: [u8; 4],
    },

    #[error("io: {path}: unsupported version {version}")]
    UnsupportedVersion { path: PathBuf, version: u32 },

    #[error("io: {path}: truncated payload: expected {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("io: {path}: dimensions {height}x{width} overflow the addressable payload")]
    DimensionOverflow { path: PathBuf, height: u64, width: u64 },

    #[error("io: {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("sde: mlp weights {path}: {reason}")]
    MlpDimension { path: PathBuf, reason: String },

    #[error("sde: mlp weights {path}: non-finite value in layer {layer}")]
    MlpNonFinite { path: PathBuf, layer: usize },

    #[error("config: line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(module: &'static str, param: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            module,
            param: param.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Module that raised the error, for machine-readable reporting.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Invalid { module, .. }
            | Error::ShapeMismatch { module, .. }
            | Error::NonFiniteScore { module, .. } => module,
            Error::NonFiniteIterate { .. } => "recon",
            Error::AccelerationUnreachable { .. } => "sampling",
            Error::MlpDimension { .. } | Error::MlpNonFinite { .. } => "sde",
            Error::Config { .. } => "config",
            Error::BadMagic { .. }
            | Error::UnsupportedVersion { .. }
            | Error::Truncated { .. }
            | Error::DimensionOverflow { .. }
            | Error::Format { .. }
            | Error::Io { .. } => "io",
        }
    }

    /// The offending parameter or input, when one can be named.
    pub fn param(&self) -> String {
        match self {
            Error::Invalid { param, .. } | Error::ShapeMismatch { param, .. } => param.clone(),
            Error::NonFiniteIterate { slot, .. } => slot.clone(),
            Error::NonFiniteScore { label, .. } => label.clone(),
            Error::AccelerationUnreachable { .. } => "accel".into(),
            Error::Config { line, .. } => format!("line{line}"),
            Error::BadMagic { path, .. }
            | Error::UnsupportedVersion { path, .. }
            | Error::Truncated { path, .. }
            | Error::DimensionOverflow { path, .. }
            | Error::Format { path, .. }
            | Error::MlpDimension { path, .. }
            | Error::MlpNonFinite { path, .. }
            | Error::Io { path, .. } => path.display().to_string(),
        }
    }
}

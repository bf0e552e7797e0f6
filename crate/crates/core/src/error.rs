use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("direction ({0}, {1}, {2}) is not unit length")]
    NonUnitDirection(f64, f64, f64),

    #[error("SH band {band} outside supported range 1..={max}")]
    BandOutOfRange { band: usize, max: usize },

    #[error("SH band mismatch: {0} vs {1}")]
    BandMismatch(usize, usize),

    #[error("expected {expected} coefficients, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("function returned non-finite value {value} at direction ({}, {}, {})", dir[0], dir[1], dir[2])]
    NonFinite { value: f64, dir: [f64; 3] },

    #[error("quadrature rule is exact to degree {have}, degree {need} is required")]
    InsufficientQuadrature { have: usize, need: usize },

    #[error("Phong exponent must be >= 1, got {0}")]
    InvalidExponent(f64),

    #[error("{path}:{line}: {msg}")]
    Obj { path: PathBuf, line: usize, msg: String },

    #[error("malformed {kind} file: {msg}")]
    Format { kind: &'static str, msg: String },

    #[error("empty scene: no triangles")]
    EmptyScene,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("mask breach: texel {0} is flagged valid but carries no surface sample")]
    MaskBreach(usize),

    #[error("T1 baked for different light (texture {texture}, active {active})")]
    LightMismatch { texture: String, active: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(kind: &'static str, msg: impl Into<String>) -> Self {
        Error::Format { kind, msg: msg.into() }
    }
}

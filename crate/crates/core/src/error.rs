use thiserror::Error;

use crate::angular::BasisIndex;

pub type Result<T, E = AlignError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("line {line}: key `{key}`: {message}")]
    Config { key: String, line: usize, message: String },

    #[error("missing required key `{key}`")]
    MissingKey { key: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("basis truncated for initial state {initial}: edge population {tail:.3e} (j_max {j_max})")]
    Truncation { initial: BasisIndex, tail: f64, j_max: u32 },

    #[error("norm drift {drift:.3e} for initial state {initial}")]
    NormDrift { initial: BasisIndex, drift: f64 },

    #[error("integrator failed near t = {time} ps: {message}")]
    Integrator { time: f64, message: String },

    #[error("time grids do not match: {0}")]
    GridMismatch(String),

    #[error("trace spacing {spacing} ps is too coarse for a {fwhm} ps probe (need spacing <= fwhm/5)")]
    CoarseGrid { spacing: f64, fwhm: f64 },

    #[error("revival window {index} around {center:.3} ps contains no samples")]
    EmptyWindow { index: u32, center: f64 },

    #[error("scale undefined: model is identically zero on the fit window")]
    UndefinedScale,

    #[error("fit residual {residual:.4} on axis {axis} exceeds threshold {threshold}")]
    FitThreshold { axis: char, residual: f64, threshold: f64 },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl AlignError {
    pub fn domain(message: impl Into<String>) -> Self {
        Self::Domain(message.into())
    }

    pub fn config(key: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Self::Config { key: key.into(), line, message: message.into() }
    }

    /// Process exit status used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } | Self::MissingKey { .. } | Self::Domain(_) => 2,
            Self::Truncation { .. } | Self::NormDrift { .. } | Self::Integrator { .. } => 3,
            Self::FitThreshold { .. } => 4,
            _ => 1,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SimError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid grid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("discrete divergence {found:.3e} exceeds tolerance {tol:.3e}")]
    DivergenceTooLarge { found: f64, tol: f64 },

    #[error("solver did not converge: {iterations} iterations, relative residual {residual:.3e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("time step {dt:.3e} fell below dt_min {dt_min:.3e}")]
    DtUnderflow { dt: f64, dt_min: f64 },

    #[error("blow-up suspected at t = {t}: {reason}")]
    BlowupSuspected { t: f64, reason: String },

    #[error("signal concentration became non-positive (min c = {min:.3e})")]
    NegativeC { min: f64 },

    #[error("cell density became negative (min n = {min:.3e})")]
    NegativeN { min: f64 },

    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("csv schema error: {0}")]
    Schema(String),

    #[error("no threshold found below s_max = {s_max}")]
    NotFound { s_max: f64 },

    #[error("{0}")]
    Experiment(String),

    #[error("run {label} did not complete: {outcome}")]
    RunIncomplete { label: String, outcome: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SimError {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors that indicate the solution is running away rather than a bug
    /// or bad input.
    pub fn is_blowup(&self) -> bool {
        matches!(
            self,
            SimError::BlowupSuspected { .. } | SimError::DtUnderflow { .. } | SimError::RunIncomplete { .. }
        )
    }
}

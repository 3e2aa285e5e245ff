use thiserror::Error;

/// Errors raised across the simulator and design toolkit.
#[derive(Debug, Error)]
pub enum IspError {
    /// A configuration value failed validation. `key` is the dotted path of
    /// the offending entry, e.g. `run.dt_s`.
    #[error("invalid configuration `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    /// The config text could not be parsed at all.
    #[error("malformed configuration: {0}")]
    Parse(String),

    /// A state or signal became non-finite.
    #[error("simulation diverged at t = {time:.6} s: {detail}")]
    Divergence { time: f64, detail: String },

    #[error("controller design failed: {0}")]
    Design(String),

    #[error("discretization failed: {0}")]
    Discretization(String),

    #[error("controller input is not finite: {0}")]
    NonFiniteInput(f64),

    #[error("metric evaluation failed: {0}")]
    Metrics(String),

    #[error("image error: {0}")]
    Image(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl IspError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        IspError::InvalidConfig {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, IspError>;

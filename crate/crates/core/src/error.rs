use std::io;

use thiserror::Error;

use crate::state::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent.
    #[error("configuration error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// A pointwise formula was evaluated outside its domain (e.g. v <= 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// The stability limit fell below the allowed minimum step.
    #[error("stiffness error at t = {t}: stable dt {dt:e} is below dt_min {dt_min:e}")]
    Stiffness { t: f64, dt: f64, dt_min: f64 },

    /// A Runge-Kutta stage produced a state violating positivity.
    #[error("integration failure at t = {t} (stage {stage}): {violation}")]
    Integration {
        t: f64,
        stage: usize,
        violation: Violation,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Time at which a trajectory failed, if the error came from integration.
    pub fn failure_time(&self) -> Option<f64> {
        match self {
            Error::Stiffness { t, .. } | Error::Integration { t, .. } => Some(*t),
            _ => None,
        }
    }
}

use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The parametric amplifier is at (or above) threshold at this frequency and its
    /// transfer amplitudes diverge.
    #[error("source is at threshold (epsilon = {epsilon}, omega = {omega}); transfer amplitudes diverge")]
    AtThreshold { epsilon: f64, omega: f64 },

    #[error("frequency {omega} outside tabulated range [{min}, {max}]")]
    OutOfRange { omega: f64, min: f64, max: f64 },

    #[error("custom spectrum table: {0}")]
    Table(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter {
        name,
        value,
        reason,
    }
}

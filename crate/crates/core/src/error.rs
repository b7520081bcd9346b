use thiserror::Error;

/// Failures raised by the numerical laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// A structural contract between inputs was violated (length or grid mismatch).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A scalar parameter is outside its admissible range.
    #[error("parameter `{name}` = {value} violates {constraint}")]
    Parameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// A multiplier denominator vanished on the resonant set.
    #[error("resonant denominator at {0:?}")]
    Resonance(Vec<f64>),

    /// NaN or infinity appeared in the solver state.
    #[error("numerical divergence at step {step} (t = {time})")]
    Divergence { step: usize, time: f64 },

    /// The discretization cannot resolve what was asked of it.
    #[error("insufficient resolution: {0}")]
    Resolution(String),

    /// Inconsistent or unrealizable configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Intermediate quantities leave the representable floating range.
    #[error("range error: {0}")]
    Range(String),

    #[error("malformed snapshot: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    constraint: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter {
            name,
            value,
            constraint,
        })
    }
}

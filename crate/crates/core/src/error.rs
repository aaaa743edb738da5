use thiserror::Error;

/// Errors raised while configuring or running a simulation.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid value for `{field}`: {reason}")]
    Range { field: &'static str, reason: String },

    #[error("inconsistent scheme configuration: {0}")]
    Scheme(String),

    #[error("placement failed: {0}")]
    Placement(String),

    #[error("degenerate geometry: transmitter and receiver are colocated")]
    DegenerateGeometry,

    #[error("non-finite {quantity} at step {step}")]
    Numerics { step: usize, quantity: &'static str },

    #[error("action distribution left the probability simplex (sum = {sum})")]
    Distribution { sum: f64 },

    #[error("config parse error: {0}")]
    Config(#[from] serde_json::Error),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    pub(crate) fn range(field: &'static str, reason: impl Into<String>) -> Self {
        SimError::Range {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;

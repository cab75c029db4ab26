use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("ordering lost at step {step} (t = {time}): gap {index} is {gap:e}; reduce dt")]
    OrderingViolation {
        step: usize,
        time: f64,
        index: usize,
        gap: f64,
    },

    #[error("event location failed at step {step} (t = {time}): {reason}")]
    EventLocation {
        step: usize,
        time: f64,
        reason: String,
    },

    #[error("conservation check failed at t = {time}: {quantity} drifted by {drift:e}")]
    Drift {
        time: f64,
        quantity: &'static str,
        drift: f64,
    },

    #[error("test function support {0}")]
    Support(String),

    #[error("parameters outside the supported regime: {0}")]
    Regime(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn non_finite(ctx: impl Into<String>) -> Self {
        Error::NonFinite {
            context: ctx.into(),
        }
    }
}

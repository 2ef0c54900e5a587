use thiserror::Error;

use crate::model::ActionId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("statistic has no observations yet")]
    Unobserved,

    #[error("malformed action: {0}")]
    MalformedAction(String),

    #[error("action pool is empty")]
    EmptyPool,

    #[error("action pool too large: reached {reached} actions (cap {cap})")]
    PoolTooLarge { reached: u64, cap: u64 },

    #[error("horizon of {horizon} slots is too short: need at least {needed}")]
    InsufficientHorizon { horizon: u64, needed: u64 },

    #[error("zero gap for action {0}: exclude optimal actions from the bound")]
    ZeroGap(usize),

    #[error("action {0} is unknown to the oracle")]
    UnknownAction(ActionId),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Rejects anything that is not finite and strictly positive.
pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

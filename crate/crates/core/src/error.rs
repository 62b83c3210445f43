use thiserror::Error;

/// Rejected configuration. The message names the offending key.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("failed to parse configuration: {0}")]
    Parse(String),
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

/// Errors raised while a simulation is running.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// An internal invariant broke. Carries a dump of the relevant state.
    #[error("invariant violated at slot {slot}: {what}\n{dump}")]
    Invariant {
        slot: u64,
        what: String,
        dump: String,
    },
}

/// A statistic that has no value for the given ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("average delay is undefined: no cells were delivered")]
    NoDeliveries,
    #[error("drop rate is undefined: no cells were generated")]
    NoArrivals,
}

use thiserror::Error;

/// Errors produced by the simulator and the closed-form engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: `{field}` {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("orthogonal pilot supply exceeded: {requested} sequences requested, coherence interval holds {available}")]
    PilotSupply { requested: usize, available: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A closed-form expression left its valid parameter domain (for
    /// example a nonpositive noise denominator). Never clamped.
    #[error("outside model domain: {0}")]
    ModelDomain(String),

    #[error("no optimal power fraction in (0,1): roots are {0} and {1}")]
    NoFeasibleRoot(f64, f64),

    #[error("effective noise variance estimate is zero (infinite SINR)")]
    DegenerateNoise,

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

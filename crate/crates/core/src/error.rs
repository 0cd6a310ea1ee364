use thiserror::Error;

/// Errors raised while building or evaluating a binder simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tone plan: {0}")]
    InvalidTonePlan(String),

    #[error("unknown profile `{0}` (run `dslvec profiles` for the built-in list)")]
    UnknownProfile(String),

    #[error("frequency {freq_hz} Hz lies outside the tone plan [{lo_hz}, {hi_hz}] Hz")]
    FrequencyOutOfPlan { freq_hz: f64, lo_hz: f64, hi_hz: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular design: {0}")]
    Singular(String),

    #[error("ill-conditioned channel (1-norm condition number {cond:.3e} exceeds {limit:.1e})")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("noise covariance is not positive definite")]
    NoisePositiveDefinite,

    #[error("scheme `{scheme}` is not defined for the {direction} direction")]
    SchemeDirection { scheme: String, direction: String },

    #[error("tone {tone}: {source}")]
    AtTone {
        tone: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_tone(self, tone: usize) -> Self {
        match self {
            e @ Error::AtTone { .. } => e,
            e => Error::AtTone {
                tone,
                source: Box::new(e),
            },
        }
    }

    /// Tone index attached to a numerical failure, if any.
    pub fn tone(&self) -> Option<usize> {
        match self {
            Error::AtTone { tone, .. } => Some(*tone),
            _ => None,
        }
    }

    /// True for failures of the numerics (singular or ill-conditioned
    /// channels) as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::AtTone { source, .. } => source.is_numerical(),
            Error::Singular(_) | Error::IllConditioned { .. } => true,
            _ => false,
        }
    }

    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

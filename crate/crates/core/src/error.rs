use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("propensity of reaction `{reaction}` is negative ({value}) at state {state:?}")]
    PropensityViolation {
        reaction: String,
        state: Vec<i64>,
        value: f64,
    },

    #[error("region compilation produced {terms} signed terms, over the limit of {limit}")]
    RegionBlowUp { terms: usize, limit: usize },

    #[error("non-finite moment derivative at t = {time}")]
    NonFinite { time: f64 },

    #[error(
        "step size underflow at t = {time} (h = {step:e}); the system looks stiff, \
         try a larger max step or looser tolerances"
    )]
    Stiffness { time: f64, step: f64 },

    #[error("numeric accuracy failure: {0}")]
    Numeric(String),

    #[error("state space exceeds the cap of {cap} states")]
    StateSpaceOverflow { cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    /// Errors raised by numerical integration or Gaussian evaluation, as
    /// opposed to malformed input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::Stiffness { .. } | Error::Numeric(_)
        )
    }
}

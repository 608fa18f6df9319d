use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error at `{key}`: {message}")]
    Schema { key: String, message: String },

    #[error("expression at `{key}`: {source}")]
    Expression {
        key: String,
        #[source]
        source: ParseError,
    },

    #[error("conflicting entries `{key}` and `{mirror}`: {message}")]
    Conflict {
        key: String,
        mirror: String,
        message: String,
    },

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("metric is degenerate at {at:?} (|det g| = {det:e})")]
    DegenerateMetric { at: Vec<f64>, det: f64 },

    #[error("effective metric is degenerate (|det H| = {det:e})")]
    DegenerateH { det: f64 },

    #[error("operation requires a Weyl-type non-metricity")]
    NotWeyl,

    #[error("null tangent vector: |H(v, v)| = {norm:e}")]
    NullVector { norm: f64 },

    #[error("need at least {needed} samples, got {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("left the expression domain at lambda = {lambda}: {source}")]
    DomainExit {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("step size underflow at lambda = {lambda} (h = {step:e})")]
    StepUnderflow { lambda: f64, step: f64 },

    #[error("loop is not closed (gap {gap:e})")]
    OpenLoop { gap: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("cannot read `{path}`: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn schema(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Short stable identifier for machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Schema { .. } => "schema",
            Error::Expression { .. } => "expression",
            Error::Conflict { .. } => "conflict",
            Error::Eval(_) => "domain",
            Error::DegenerateMetric { .. } => "degenerate_metric",
            Error::DegenerateH { .. } => "degenerate_h",
            Error::NotWeyl => "not_weyl",
            Error::NullVector { .. } => "null_vector",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::DomainExit { .. } => "domain_exit",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::OpenLoop { .. } => "open_loop",
            Error::Invalid(_) => "invalid_input",
            Error::Json(_) => "json",
            Error::Read { .. } | Error::Io(_) => "io",
        }
    }

    /// Geometry-file key the error refers to, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            Error::Schema { key, .. }
            | Error::Expression { key, .. }
            | Error::Conflict { key, .. } => Some(key),
            _ => None,
        }
    }
}

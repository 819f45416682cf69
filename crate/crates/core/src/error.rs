use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid construction parameters (unsupported family, zero-sized rule, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A weight such as `1/a` or `1/(2E)` is non-finite or its denominator
    /// vanishes at a quadrature node.
    #[error("singular weight {what} at {location}")]
    SingularWeight { what: String, location: String },

    /// The nonlinear source could not be evaluated at a quadrature node.
    #[error("nonlinear term undefined at node {node} (u = {value})")]
    NonlinearEvaluation { node: usize, value: String },

    #[error("interpolation point {point} outside [{lo}, {hi}]")]
    Extrapolation { point: f64, lo: f64, hi: f64 },

    /// Inverting `t -> S(t)` failed because no bracketing interval exists.
    #[error("phase inversion failed: {0}")]
    PhaseInversion(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn singular(what: impl Into<String>, location: impl Into<String>) -> Self {
        Error::SingularWeight {
            what: what.into(),
            location: location.into(),
        }
    }
}

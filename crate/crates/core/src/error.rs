use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfRange { what: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error(
        "quadrature did not converge after {evaluations} evaluations: \
         estimate {estimate:.3e}, error {error:.3e}, worst panel [{worst_lo}, {worst_hi}]"
    )]
    Quadrature { evaluations: usize, estimate: f64, error: f64, worst_lo: f64, worst_hi: f64 },

    #[error("no accessible ground station")]
    NoAccessibleGroundStation,

    #[error("empty search space: {0}")]
    EmptySearchSpace(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

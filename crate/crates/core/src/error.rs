use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// `f_k` evaluated outside `(0, bound]`.
    #[error("argument {x} outside the rate function domain (0, {bound}]")]
    RateDomain { x: f64, bound: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("line {line}: {msg}")]
    ConfigLine { line: usize, msg: String },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("modeling error: {0}")]
    Modeling(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

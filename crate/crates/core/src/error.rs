use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid scenario, geometry or option values, or mismatched dimensions.
    #[error("configuration error: {0}")]
    Config(String),
    /// An argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Non-finite intermediate values.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// The request is valid but too large for the chosen method.
    #[error("capability error: {0}")]
    Capability(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

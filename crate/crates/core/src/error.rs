use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {param} = {value} ({expected})")]
    Config { param: String, value: String, expected: String },
    #[error("accuracy error: {0}")]
    Accuracy(String),
    #[error("spectral error: {0}")]
    Spectral(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("degenerate basis: {0}")]
    Degenerate(String),
    #[error("regime error: {0}")]
    Regime(String),
    #[error("decomposition failed after {iterations} iterations, residual {residual:.3e}")]
    Decomposition { iterations: usize, residual: f64 },
    #[error("construction error: {0}")]
    Construction(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config(param: &str, value: impl std::fmt::Display, expected: &str) -> Error {
    Error::Config { param: param.into(), value: value.to_string(), expected: expected.into() }
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("chain does not live on this complex: {0}")]
    CarrierMismatch(String),
    #[error("malformed complex: {0}")]
    Malformed(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("search space exceeds cap: {0}")]
    SearchCap(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

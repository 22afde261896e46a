//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape: {0}")]
    Shape(String),
    #[error("rank: {0}")]
    Rank(String),
    #[error("numeric: {0}")]
    Numeric(String),
    #[error("population: {0}")]
    Population(String),
    #[error("sample: {0}")]
    Sample(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("no heterogeneity: {0}")]
    NoHeterogeneity(String),
    #[error("config: {0}")]
    Config(String),
    #[error("rank-mismatch: {0}")]
    RankMismatch(String),
    #[error("diverged: local training loss reached {0}")]
    Diverged(f64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

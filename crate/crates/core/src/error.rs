use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular point: {0}")]
    Singular(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("grid too coarse: {0}")]
    Resolution(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("ill-conditioned: {0}")]
    Conditioning(String),
    #[error("iteration diverged: correction norms {0:?}")]
    Divergence(Vec<f64>),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FemError {
    #[error(transparent)]
    Core(#[from] tepml::Error),
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("factorization broke down (pivot ratio {pivot_ratio:.3e}); the frequency may be excluded")]
    Breakdown { pivot_ratio: f64 },
    #[error("solve residual {0:.3e} above tolerance")]
    Residual(f64),
    #[error("zero field: the ratio is undefined")]
    ZeroField,
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FemError>;

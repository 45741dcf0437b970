use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("characteristic roots are degenerate: |l1^2 - l2^2| = {gap:.3e} (scale {scale:.3e})")]
    DegenerateRoots { gap: f64, scale: f64 },
    #[error("root selection failed: {0}")]
    RootSelection(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("evaluation at coincident points (separation {0:.3e})")]
    Singular(f64),
    #[error("finite-difference point too close to the source: {dist:.3e} <= {min:.3e}")]
    TooCloseForFd { dist: f64, min: f64 },
    #[error("target at distance {dist:.3e} from the surface, closer than one panel ({min:.3e})")]
    NearSingularQuadrature { dist: f64, min: f64 },
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("mismatched data: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

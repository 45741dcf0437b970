use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("constraint check failed:\n{0}")]
    Constraints(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("solver broke down at every sweep point")]
    AllBrokeDown,
    #[error(transparent)]
    Core(#[from] tepml::Error),
    #[error(transparent)]
    Fem(#[from] tepml_fem::FemError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Constraints(_) => 2,
            HarnessError::AllBrokeDown => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

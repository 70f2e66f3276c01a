use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error)]
pub enum CalcError {
    #[error("point outside domain: {0}")]
    Domain(String),
    #[error("jet order exhausted: {0}")]
    Capability(String),
    #[error("weight mismatch: {0}")]
    Weight(String),
    #[error("scale mismatch: {0}")]
    Scale(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("degenerate structure: {0}")]
    Degenerate(String),
    #[error("not almost Einstein: {0}")]
    NotAlmostEinstein(String),
    #[error("not a defining density: {0}")]
    NotDefining(String),
    #[error("boundary degeneracy: {0}")]
    BoundaryDegeneracy(String),
    #[error("normalization: {0}")]
    Normalization(String),
    #[error("resonant parameter: {0}")]
    Resonance(String),
    #[error("grid did not converge: {0}")]
    Grid(String),
    #[error("ill-conditioned input: {0}")]
    Conditioning(String),
    #[error("wrong branch: {0}")]
    Branch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CalcError>;

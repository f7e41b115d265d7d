use thiserror::Error;

pub type Result<T> = std::result::Result<T, BdmError>;

#[derive(Debug, Error)]
pub enum BdmError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: expected {expected} samples, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("boundary function needs both components of S*X, found {0}")]
    MissingComponent(usize),
    #[error("form degree overflow: {0} + {1} > 3")]
    DegreeOverflow(usize, usize),
    #[error("expected a form of degree {expected}, found {found}")]
    FormDegree { expected: usize, found: usize },
    #[error("transmission property violated: odd fiber modes of size {0:.3e} at the boundary")]
    Transmission(f64),
    #[error("Π′ is undefined on functions that do not decay at infinity (limit {0:.3e})")]
    NonDecaying(f64),
    #[error("dilation parameter must be positive, got {0}")]
    NonPositiveDilation(f64),
    #[error("incompatible discretizations: {0}")]
    Incompatible(String),
    #[error("cochain of degree {degree} evaluated on {args} arguments")]
    Arity { degree: usize, args: usize },
    #[error("operator needs a cochain of degree at least 1")]
    DegreeZero,
    #[error("K1 representative is not invertible: residual {0:.3e}")]
    NotInvertible(f64),
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("calibration failure: {0}")]
    Calibration(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

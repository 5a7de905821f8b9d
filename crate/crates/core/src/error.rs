use thiserror::Error;

/// Errors raised by the estimation, simulation and preprocessing routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FarError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate spectrum: all eigenvalues are zero")]
    DegenerateSpectrum,

    #[error("singular system (condition number {condition:.3e})")]
    SingularSystem { condition: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl FarError {
    /// Short machine-readable tag used in error records.
    pub fn kind(&self) -> &'static str {
        match self {
            FarError::InvalidGrid(_) => "invalid-grid",
            FarError::Dimension { .. } => "dimension",
            FarError::GridMismatch => "grid-mismatch",
            FarError::InsufficientData(_) => "insufficient-data",
            FarError::InvalidArgument(_) => "invalid-argument",
            FarError::DegenerateSpectrum => "degenerate-spectrum",
            FarError::SingularSystem { .. } => "singular-system",
            FarError::Numerical(_) => "numerical",
            FarError::Parse { .. } => "parse",
            FarError::Data(_) => "data",
            FarError::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for FarError {
    fn from(e: std::io::Error) -> Self {
        FarError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FarError>;

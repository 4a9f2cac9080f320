use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid resolution {got}: need at least {min}")]
    InvalidResolution { got: usize, min: usize },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("assembly failed at ({x:.6}, {y:.6}): {msg}")]
    Assembly { x: f64, y: f64, msg: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("coercivity violated: {0}")]
    Coercivity(String),

    #[error("degenerate linearization: {0}")]
    Degenerate(String),

    #[error("missing dependency: {0}")]
    Dependency(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("corrector cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

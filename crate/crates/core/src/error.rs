use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulus mismatch: expected {expected}, found {found}")]
    ModulusMismatch { expected: String, found: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index list is empty")]
    EmptyIndices,
    #[error("eigen solver did not converge ({0})")]
    NoConvergence(String),
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below -{tol:e}")]
    NotPsd { eigenvalue: f64, tol: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no admissible cutoff inside the window (largest length {max_length}, threshold {k})")]
    WindowTooSmall { max_length: f64, k: f64 },
    #[error("band {band} too large for modulus {n}")]
    BandTooLarge { band: u64, n: u64 },
    #[error("twist or amplification mismatch: {0}")]
    TwistMismatch(String),
    #[error("no norm oracle available: {0}")]
    NoOracle(String),
    #[error("grid {grid} too coarse for band {band} (need at least {min})")]
    GridTooCoarse { grid: usize, band: u64, min: usize },
    #[error("model and element are incompatible: {0}")]
    Incompatible(String),
    #[error("generator relation check failed: {0}")]
    RelationFailure(String),
    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("element has nonzero mean {0:e}")]
    NonzeroMean(f64),
    #[error("degenerate sample: {0}")]
    Degenerate(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

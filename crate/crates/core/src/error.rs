use thiserror::Error;

/// Errors produced anywhere in the reconstruction pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm² = {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("trace is not 1 (got {trace})")]
    InvalidTrace { trace: f64 },

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("eigenvector matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error(
        "degenerate spectrum: minimum eigenvalue gap {gap:e} is below {threshold:e}; \
         apply a small tilt to the observable to lift the degeneracy"
    )]
    DegenerateSpectrum { gap: f64, threshold: f64 },

    #[error("degenerate Vandermonde nodes: minimum gap {gap:e} is below {threshold:e}")]
    DegenerateNodes { gap: f64, threshold: f64 },

    #[error("too many Vandermonde nodes: {d} exceeds the cap of {max}")]
    TooManyNodes { d: usize, max: usize },

    #[error("empty input: {what}")]
    Empty { what: &'static str },

    #[error("observables are not fully incompatible: |<a_{i}|b_{j}>| = {overlap:e}")]
    IncompatibilityViolated { i: usize, j: usize, overlap: f64 },

    #[error("post-selection too weak: probability {probability:e} below floor {floor:e}")]
    PostSelectionTooWeak { probability: f64, floor: f64 },

    #[error("tensor size {size} exceeds cap {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("invalid grid: {reason}")]
    InvalidGrid { reason: String },

    #[error("parameter {value} does not lie on the conjugate grid (spacing {spacing})")]
    OffGridParameter { value: f64, spacing: f64 },

    #[error("incomplete sampling: expected {expected} grid points, found {found}")]
    IncompleteSampling { expected: usize, found: usize },

    #[error("photon state norm violated: {norm_sq}")]
    NormViolation { norm_sq: f64 },

    #[error("invalid probability vector: {reason}")]
    InvalidProbability { reason: String },

    #[error("insufficient counts at pixel {pixel}: {counts} < {floor}")]
    InsufficientCounts { pixel: usize, counts: u64, floor: u64 },

    #[error("missing measurement setting: {setting}")]
    MissingSetting { setting: String },

    #[error("photon is in the {found} plane, expected the {expected} plane")]
    PlaneMismatch { expected: &'static str, found: &'static str },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("ordering tag mismatch: {left} vs {right}")]
    OrderingTagMismatch { left: String, right: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::NotHermitian { .. } => "NotHermitian",
            Error::InvalidTrace { .. } => "InvalidTrace",
            Error::NotPositive { .. } => "NotPositive",
            Error::NotUnitary { .. } => "NotUnitary",
            Error::DegenerateSpectrum { .. } => "DegenerateSpectrum",
            Error::DegenerateNodes { .. } => "DegenerateNodes",
            Error::TooManyNodes { .. } => "TooManyNodes",
            Error::Empty { .. } => "Empty",
            Error::IncompatibilityViolated { .. } => "IncompatibilityViolated",
            Error::PostSelectionTooWeak { .. } => "PostSelectionTooWeak",
            Error::SizeCap { .. } => "SizeCap",
            Error::InvalidGrid { .. } => "InvalidGrid",
            Error::OffGridParameter { .. } => "OffGridParameter",
            Error::IncompleteSampling { .. } => "IncompleteSampling",
            Error::NormViolation { .. } => "NormViolation",
            Error::InvalidProbability { .. } => "InvalidProbability",
            Error::InsufficientCounts { .. } => "InsufficientCounts",
            Error::MissingSetting { .. } => "MissingSetting",
            Error::PlaneMismatch { .. } => "PlaneMismatch",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::OrderingTagMismatch { .. } => "OrderingTagMismatch",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Parse { .. } => "ParseError",
            Error::Schema { .. } => "SchemaError",
            Error::Io(_) => "IoError",
        }
    }

    /// I/O failures map to exit status 1, everything else is a domain error.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by geometry, sketching, and analysis operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("outline needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),

    #[error("shape is not star-shaped about its centroid: {0}")]
    NotStarShaped(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("sketch parameter mismatch: {0}")]
    SketchMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical overflow: {0}")]
    Overflow(String),

    #[error("tied values violate general position: {0}")]
    TiedValues(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed input file {path}: {detail}")]
    Format { path: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

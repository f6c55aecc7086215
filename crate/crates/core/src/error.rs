use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("frame mismatch: expected `{expected}`, found `{found}`")]
    FrameMismatch { expected: String, found: String },

    #[error("point {index} has a non-finite coordinate")]
    NonFinitePoint { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid detection: {0}")]
    InvalidDetection(String),

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },

    // PCD
    #[error("malformed PCD header: {0}")]
    MalformedHeader(String),
    #[error("truncated PCD body: header declares {declared} points, payload holds {available}")]
    TruncatedBody { declared: usize, available: usize },
    #[error("unsupported PCD data mode `{0}`")]
    UnsupportedDataMode(String),
    #[error("malformed PCD body: {0}")]
    MalformedBody(String),

    // Occupancy maps
    #[error("bad PGM magic: expected P5")]
    BadMagic,
    #[error("image dimensions do not match payload: {0}")]
    DimensionMismatch(String),
    #[error("unsupported PGM maxval {0} (only 255 is accepted)")]
    MaxvalUnsupported(u32),
    #[error("malformed map metadata: {0}")]
    MalformedMetadata(String),
    #[error("grid geometry mismatch")]
    GeometryMismatch,

    // Detections
    #[error("malformed detection record on line {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    // Algorithms
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("no floor found: best inlier fraction {fraction:.4} below required {required:.4}")]
    NoFloorFound { fraction: f64, required: f64 },
    #[error("cannot fit a box to an empty cluster")]
    EmptyCluster,
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }

    pub(crate) fn frame_mismatch(expected: &str, found: &str) -> Self {
        Error::FrameMismatch {
            expected: expected.to_owned(),
            found: found.to_owned(),
        }
    }
}

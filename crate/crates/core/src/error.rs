use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("no correspondences within {max_distance} m at the initial pose")]
    NoCorrespondences { max_distance: f64 },

    #[error("hull does not overlap any rack slot")]
    NoOverlap,

    #[error("slot index {index} out of range (rack has {count} slots)")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("infeasible scene config: {0}")]
    InfeasibleConfig(String),

    #[error("identity mismatch: {0}")]
    IdentityMismatch(String),

    #[error("PLY parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateInput(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

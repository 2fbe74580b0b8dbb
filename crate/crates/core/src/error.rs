use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point id {id} out of range for a space with {len} points")]
    PointOutOfRange { id: usize, len: usize },

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("empty candidate set for the diagonal search")]
    EmptyCandidates,

    #[error("non-finite kernel value {value} at t = {t}")]
    NonFiniteKernel { t: f64, value: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("({r}, {s}) is not in region {region} for sigma = {sigma}")]
    OutsideRegion { region: char, r: String, s: String, sigma: String },

    #[error("inadmissible exponents: {0}")]
    Inadmissible(String),

    #[error("non-finite intermediate value: {0}")]
    NonFinite(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

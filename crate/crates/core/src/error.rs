use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module.
///
/// The CLI maps [`Error::code`] into the machine-readable error object and
/// [`Error::exit_code`] into the process exit status.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("insufficient degree: {0}")]
    InsufficientDegree(String),
    #[error("not positive semidefinite: {message}")]
    NotPsd { message: String, witness: Option<String> },
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("Fock truncation overflow: {0}")]
    Overflow(String),
    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),
    #[error("pole hit: {0}")]
    PoleHit(String),
    #[error("not freely infinitely divisible: {message}")]
    NotFid { message: String, witness: Option<String> },
    #[error("inadmissible map: {message}")]
    Inadmissible { message: String, witness: Option<String> },
    #[error("no convergence: {message}")]
    NonConvergence { message: String, last: Option<String> },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short stable identifier used in serialized error objects.
    pub fn code(&self) -> &'static str {
        match self {
            Error::SizeLimit(_) => "size_limit",
            Error::Domain(_) => "domain",
            Error::Malformed(_) => "malformed",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::InsufficientDegree(_) => "insufficient_degree",
            Error::NotPsd { .. } => "not_psd",
            Error::Inconsistent(_) => "inconsistent",
            Error::Unsupported(_) => "unsupported",
            Error::Overflow(_) => "overflow",
            Error::TruncationTooSmall(_) => "truncation_too_small",
            Error::PoleHit(_) => "pole_hit",
            Error::NotFid { .. } => "not_fid",
            Error::Inadmissible { .. } => "inadmissible",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Io(_) => "io",
        }
    }

    pub fn witness(&self) -> Option<&str> {
        match self {
            Error::NotPsd { witness, .. }
            | Error::NotFid { witness, .. }
            | Error::Inadmissible { witness, .. } => witness.as_deref(),
            Error::NonConvergence { last, .. } => last.as_deref(),
            _ => None,
        }
    }

    /// 2 for validation failures, 3 for I/O, 4 for numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 3,
            Error::NonConvergence { .. } => 4,
            _ => 2,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Malformed(e.to_string())
    }
}

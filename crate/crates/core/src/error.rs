use thiserror::Error;

/// Failures raised by the numerical routines.
///
/// Numeric payloads are reported as `f64` regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M - M^dag| = {max_dev:e})")]
    NonHermitianInput { max_dev: f64 },

    #[error("negative eigenvalue {eigenvalue:e} below the support cutoff")]
    NegativeSpectrum { eigenvalue: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("map is not CPTP: {0}")]
    NotCptp(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("prior is singular on the required support: {0}")]
    SingularPrior(String),

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("operator is not full rank: {0}")]
    NotFullRank(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

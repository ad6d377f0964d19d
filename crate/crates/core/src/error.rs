use thiserror::Error;

/// Failures raised by the design and evaluation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeamError {
    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{what} is rank deficient (eigenvalue ratio {ratio:.3e})")]
    RankDeficient { what: &'static str, ratio: f64 },

    #[error("{0} is singular")]
    Singular(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = BeamError> = std::result::Result<T, E>;

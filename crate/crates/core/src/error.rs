use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("range error: {0}")]
    Range(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator is not normal: ||xx* - x*x||_0 = {commutator:e} exceeds {limit:e}")]
    NonNormal { commutator: f64, limit: f64 },

    #[error("ambiguous eigenvalue cluster: spread {spread:e} exceeds {limit:e}")]
    ClusterAmbiguity { spread: f64, limit: f64 },

    #[error("ill-posed input: {0}")]
    IllPosed(String),

    #[error("idempotent recovery failed: {0}")]
    NonIdempotent(String),

    #[error("function vanishes on every sample point; Hölder exponent undefined")]
    Vanishing,

    #[error("spectral function has no table entry for eigenvalue {0}")]
    MissingTableEntry(num_complex::Complex64),

    #[error("spectrum is not contained in [0, inf): eigenvalue {0}")]
    NegativeSpectrum(num_complex::Complex64),

    #[error("generators do not commute: ||[g_{i}, g_{j}]||_0 = {value:e}")]
    NonCommuting { i: usize, j: usize, value: f64 },

    #[error("Jacobi iteration did not converge after {0} sweeps")]
    NotConverged(usize),

    #[error("postcondition violated: {0}")]
    Postcondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures map to exit status 2 in the CLI; everything else is
    /// an input validation failure.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Range(_)
                | Error::NonNormal { .. }
                | Error::ClusterAmbiguity { .. }
                | Error::IllPosed(_)
                | Error::NonIdempotent(_)
                | Error::Vanishing
                | Error::MissingTableEntry(_)
                | Error::NegativeSpectrum(_)
                | Error::NonCommuting { .. }
                | Error::NotConverged(_)
                | Error::Postcondition(_)
        )
    }
}

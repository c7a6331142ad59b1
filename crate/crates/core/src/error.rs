use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("site {site} is outside 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("site {0} appears more than once")]
    DuplicateSite(usize),

    #[error("site list is empty")]
    EmptySites,

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("{n_sites} sites exceeds the configured cap of {cap} (set NESSFORGE_MAX_N to raise it)")]
    CapExceeded { n_sites: usize, cap: usize },

    #[error("steady state is not unique: kernel dimension {0}")]
    NonUniqueSteadyState(usize),

    #[error("no kernel vector found (smallest relative singular value {0:e})")]
    NoKernel(f64),

    #[error("steady-state residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("uniqueness not established: operator algebra has dimension {dim} of {full}")]
    UniquenessNotEstablished { dim: usize, full: usize },

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Failures of the numerics rather than of the input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NonUniqueSteadyState(_)
                | Error::NoKernel(_)
                | Error::ResidualTooLarge { .. }
                | Error::UniquenessNotEstablished { .. }
                | Error::Numerical(_)
        )
    }
}

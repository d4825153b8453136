use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain size {n}: need at least {min} sites")]
    InvalidSize { n: usize, min: usize },

    #[error("{n} sites exceed the dense-matrix limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("eigenphase {phase} lies within {guard:e} rad of the branch cut at ±π")]
    BranchAmbiguity { phase: f64, guard: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("offset choice drives coefficient {index} negative ({value:e})")]
    InvalidOffset { index: usize, value: f64 },

    #[error("could not draw {wanted} distinct offset columns within {attempts} attempts")]
    Exhausted { wanted: usize, attempts: usize },

    #[error("weight system is infeasible: residual {residual:e} after rank truncation (rank {rank})")]
    Infeasible { residual: f64, rank: usize },

    #[error("origin lies outside the convex hull of the delta columns; separating direction {direction:?}")]
    HullInfeasible { direction: Vec<f64>, residual: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("phase {0} outside [0, 1)")]
    PhaseOutOfRange(f64),

    #[error("energy {0} outside the normalised spectrum [-1, 1]")]
    SpectralNorm(f64),

    #[error("no noise-table entry for strength {0}")]
    MissingNoiseEntry(f64),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

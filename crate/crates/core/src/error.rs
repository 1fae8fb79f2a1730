use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite entries in {0}")]
    NonFinite(String),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("A0 is singular")]
    SingularA0,

    #[error("B does not have full column rank (rank {rank}, expected {q})")]
    RankDeficientB { rank: usize, q: usize },

    #[error("model is not stable: spectral radius {spectral_radius:.6} >= 1 - margin")]
    Unstable { spectral_radius: f64 },

    #[error("a(z) is singular at z = {0}")]
    PoleAtZ(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("restriction rows are linearly dependent (rank {rank} < {rows} rows)")]
    RankDeficientRestrictions { rank: usize, rows: usize },

    #[error("conflicting restriction: {0}")]
    ConflictingFix(String),

    #[error("unsupported restriction: {0}")]
    UnsupportedRestriction(String),

    #[error("companion dimension {dim} exceeds the dense Lyapunov cap {cap}; use the doubling solver")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("covariance horizon {have} is shorter than required {need}")]
    HorizonTooShort { have: usize, need: usize },

    #[error("rank increments did not stabilise up to r_max = {r_max}; increase the horizon")]
    NotStabilized { r_max: usize },

    #[error("Yule-Walker system is inconsistent (relative residual {residual:.3e})")]
    InconsistentSystem { residual: f64 },

    #[error("construction failed after {attempts} attempts: {reason}")]
    ConstructionFailed { attempts: usize, reason: String },

    #[error("innovation covariance is nonsingular (q = n); singular-specific checks do not apply")]
    NotSingular,

    #[error("Gamma_p is nonsingular; nothing to identify")]
    NonsingularGamma,

    #[error("at least one trial is required")]
    EmptyTrials,

    #[error("matrix is not diagonalizable (eigenvector condition number {0:.3e})")]
    NotDiagonalizable(f64),

    #[error("eigenvalue with modulus {0:.9} lies on the unit circle")]
    RootOnUnitCircle(f64),

    #[error("existence/uniqueness condition fails: {0}")]
    ExistenceUniquenessFailed(String),

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

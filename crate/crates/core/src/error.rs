use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("generator raised to order {order} misses the identity by {residual:.3e}")]
    NotARepresentation { order: usize, residual: f64 },

    #[error("group element {index} out of range for a group of order {order}")]
    IndexOutOfRange { index: usize, order: usize },

    #[error("group orders differ: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("operation needs a single-generator (cyclic) representation")]
    NotCyclic,

    #[error("constraint has an empty left null space")]
    EmptyNullSpace,

    #[error("SVD did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("rank {r} out of range (at most {max})")]
    RankOutOfRange { r: usize, max: usize },

    #[error("matrix is not symmetric (asymmetry {residual:.3e})")]
    NotSymmetric { residual: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("data covariance is singular; X must have full row rank")]
    SingularData,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid lambda grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate spectrum: singular values {index} and {next} coincide (relative gap {gap:.3e})", next = index + 1)]
    DegenerateSpectrum { index: usize, gap: f64 },

    #[error("{count} index subsets exceed the enumeration limit")]
    TooManySubsets { count: u128 },

    #[error("missing input: {0}")]
    MissingInput(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cross-entropy targets must be one-hot columns")]
    NonOneHotTargets,

    #[error("training diverged at epoch {epoch} (objective {objective:.3e})")]
    DivergenceDetected { epoch: usize, objective: f64 },

    #[error("orbit mean of the predictor is zero")]
    OrbitMeanZero,

    #[error("kernel argument is the zero vector")]
    ZeroVector,

    #[error("representation is not unitary")]
    NotUnitary,

    #[error("kernel solve failed (relative residual {residual:.3e})")]
    SingularKernel { residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

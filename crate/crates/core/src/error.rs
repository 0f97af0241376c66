use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("element {index} is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { index: usize, min_eigenvalue: f64 },

    #[error("elements do not sum to the identity (Frobenius deviation {deviation:e})")]
    NotComplete { deviation: f64 },

    #[error("a measurement needs at least two outcomes, got {0}")]
    TooFewOutcomes(usize),

    #[error("eigensolver did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("measurement probabilities are state independent (reduced rank 0)")]
    DegenerateMeasurement,

    #[error("polytope is unbounded")]
    Unbounded,

    #[error("vertex enumeration aborted: more than {limit} vertices")]
    AbortTooManyVertices { limit: usize },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid entropy parameters: {0}")]
    InvalidEntropy(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("vectors are not an orthonormal basis (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("parameter {name} = {value} outside of {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("dimension {dim} exceeds the brute-force cap of {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("state is not normalizable")]
    ZeroState,
}

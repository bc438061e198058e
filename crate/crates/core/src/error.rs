use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: max |A_ij - conj(A_ji)| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite: minimum eigenvalue {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error(
        "POVM element {index} is not positive semidefinite: minimum eigenvalue {min_eigenvalue:e}"
    )]
    PovmElementNotPsd { index: usize, min_eigenvalue: f64 },

    #[error("POVM element {index} is not Hermitian: deviation {deviation:e}")]
    PovmElementNotHermitian { index: usize, deviation: f64 },

    #[error("POVM elements do not sum to the identity: max entry deviation {deviation:e}")]
    CompletenessViolated { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("arity mismatch: expected {expected} elements, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("an ensemble needs at least {min} states, found {found}")]
    TooFewStates { min: usize, found: usize },

    #[error("prior {index} is invalid: {value}")]
    InvalidPrior { index: usize, value: f64 },

    #[error("priors sum to {sum}, expected 1")]
    PriorsNotNormalized { sum: f64 },

    #[error("state {index}: {source}")]
    InvalidState { index: usize, source: Box<Error> },

    #[error("probability {value} lies outside [0, 1] beyond tolerance")]
    ProbabilityOutOfRange { value: f64 },

    #[error("two-state discrimination requires exactly 2 states, found {found}")]
    WrongArity { found: usize },

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    #[error("unsupported dimension {dim}: {reason}")]
    UnsupportedDimension { dim: usize, reason: &'static str },

    #[error("certificate is infeasible: sigma[{index}] has minimum eigenvalue {min_eigenvalue:e}")]
    InfeasibleCertificate { index: usize, min_eigenvalue: f64 },

    #[error("malformed detector statistics: {0}")]
    MalformedStatistics(String),

    #[error("ordering is not a permutation of 0..{n}")]
    BadPermutation { n: usize },

    #[error("best cyclic bound supports at most {max} states, found {found}")]
    TooLarge { max: usize, found: usize },

    #[error(
        "decomposition target differs from the purified marginal by {residual:e} in trace norm"
    )]
    MarginalMismatch { residual: f64 },

    #[error("member {index} cannot be steered: {reason}")]
    UnsteerableWeight { index: usize, reason: String },

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("decompositions do not share a target: residual {residual:e}")]
    TargetMismatch { residual: f64 },

    #[error("{path}: {message}")]
    Malformed { path: String, message: String },

    #[error("instance hash {found} does not match the report's {expected}")]
    HashMismatch { expected: String, found: String },
}

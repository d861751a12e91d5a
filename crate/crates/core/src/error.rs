//! Error types shared across the engine.

use thiserror::Error;

use crate::efa::FactorSolution;
use crate::stats::LogisticFit;

/// Broad failure class, used by callers to map errors onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The input data cannot support the requested analysis.
    Data,
    /// An iterative or algebraic procedure failed numerically.
    Numerical,
    /// An analysis or generative-model specification is invalid.
    Spec,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed csv at line {line}: {message}")]
    CsvParse { line: u64, message: String },

    #[error("non-numeric cell '{value}' at data row {row}, column '{column}'")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("duplicate item id '{0}' in header")]
    DuplicateItem(String),

    #[error("duplicate participant id '{0}'")]
    DuplicateParticipant(String),

    #[error("{context}: dataset has no rows")]
    EmptyDataset { context: String },

    #[error("matrix still has {count} missing cells; apply listwise deletion before scoring")]
    MissingCells { count: usize },

    #[error(
        "response {value} for participant '{participant}', item '{item}' is outside the scale range [{min}, {max}]"
    )]
    OutOfRange {
        participant: String,
        item: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid scale specification: {0}")]
    InvalidScale(String),

    #[error("unknown item id '{0}'")]
    UnknownItem(String),

    #[error("{context}: needs at least {needed} {unit}, got {got}")]
    InsufficientData {
        context: String,
        needed: usize,
        got: usize,
        unit: &'static str,
    },

    #[error("{context} has zero variance")]
    ZeroVariance { context: String },

    #[error(
        "participant sets do not match (only in first: {missing_right:?}; only in second: {missing_left:?})"
    )]
    Misaligned {
        /// Ids present in the first input but absent from the second.
        missing_right: Vec<String>,
        /// Ids present in the second input but absent from the first.
        missing_left: Vec<String>,
    },

    #[error("item '{item}' is not dichotomous; dichotomize it explicitly before DIF analysis")]
    NotDichotomous { item: String },

    #[error("item '{item}': every stratum was dropped for zero margins; no usable 2x2 tables")]
    NoUsableStrata { item: String },

    #[error("{context}: expected agreement is 1, statistic is undefined")]
    DegenerateAgreement { context: String },

    #[error("{transform} transform is undefined for value {value}")]
    Domain { transform: String, value: f64 },

    #[error("norm standard deviation must be positive, got {sd}")]
    DegenerateNorm { sd: f64 },

    #[error("matrix is not symmetric: |a[{row},{col}] - a[{col},{row}]| = {delta:e}")]
    NonSymmetric { row: usize, col: usize, delta: f64 },

    #[error("jacobi eigendecomposition did not converge after {sweeps} sweeps")]
    JacobiNotConverged { sweeps: usize },

    #[error("singular matrix in {context}")]
    Singular { context: String },

    #[error("principal axis factoring did not converge after {iterations} iterations")]
    PafNotConverged {
        iterations: usize,
        /// Solution at the last completed iteration, for diagnosis.
        last: Box<FactorSolution>,
    },

    #[error("logistic regression did not converge after {iterations} iterations")]
    IrlsNotConverged {
        iterations: usize,
        /// Fit at the last completed iteration, for diagnosis.
        last: Box<LogisticFit>,
    },

    #[error("perfect separation detected in {context}; coefficients are unbounded")]
    Separation { context: String },

    #[error("{context}: matrix is not positive definite")]
    NotPositiveDefinite { context: String },

    #[error("invalid simulation spec: {0}")]
    InvalidSimSpec(String),

    #[error("invalid parameter {param}: {message}")]
    InvalidParam { param: String, message: String },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            CsvParse { .. }
            | NonNumericCell { .. }
            | DuplicateItem(_)
            | DuplicateParticipant(_)
            | EmptyDataset { .. }
            | MissingCells { .. }
            | OutOfRange { .. }
            | InsufficientData { .. }
            | ZeroVariance { .. }
            | Misaligned { .. }
            | NotDichotomous { .. }
            | NoUsableStrata { .. }
            | DegenerateAgreement { .. }
            | Domain { .. }
            | DegenerateNorm { .. } => ErrorKind::Data,
            NonSymmetric { .. }
            | JacobiNotConverged { .. }
            | Singular { .. }
            | PafNotConverged { .. }
            | IrlsNotConverged { .. }
            | Separation { .. } => ErrorKind::Numerical,
            InvalidScale(_)
            | UnknownItem(_)
            | NotPositiveDefinite { .. }
            | InvalidSimSpec(_)
            | InvalidParam { .. } => ErrorKind::Spec,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

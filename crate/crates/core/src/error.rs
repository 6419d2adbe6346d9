use std::path::PathBuf;

use thiserror::Error;

use crate::qapca::BinaryAssignment;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("empty matrix: {rows}x{cols}")]
    Empty { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("svd did not converge within {max_iterations} iterations")]
    SvdNoConvergence { max_iterations: usize },

    #[error("matrix is rank deficient: rank {rank} < {required} (nearest orthonormal matrix is not unique)")]
    RankDeficient { rank: usize, required: usize },

    #[error("projection direction is not unit length (norm {norm})")]
    NotUnitVector { norm: f64 },

    #[error("spin vector has length {got}, problem has {expected} spins")]
    SpinLength { expected: usize, got: usize },

    #[error("spin {index} is {value}, expected +1 or -1")]
    InvalidSpin { index: usize, value: i64 },

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("problem has {size} spins, exhaustive search is capped at {cap}")]
    TooLarge { size: usize, cap: usize },

    #[error("invalid anneal schedule: {0}")]
    InvalidSchedule(String),

    #[error("transport failure talking to {endpoint}: {message}")]
    Transport { endpoint: String, message: String },

    #[error("malformed solver response: {0}")]
    MalformedResponse(String),

    #[error("sample {index}: reported energy {reported} but recomputed {recomputed}")]
    EnergyMismatch {
        index: usize,
        reported: f64,
        recomputed: f64,
    },

    #[error("coupling matrix is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },

    #[error("coupler budget {c_limit} cannot hold {needed} couplers needed for N={n}, K={k}")]
    InfeasibleBudget {
        n: usize,
        k: usize,
        c_limit: u64,
        needed: u64,
    },

    #[error("invalid band offset {offset} for N={n} (must lie in [2, N])")]
    InvalidBand { offset: usize, n: usize },

    #[error("data became numerically zero after {achieved} of {requested} components")]
    DeflationExhausted { achieved: usize, requested: usize },

    #[error("binary assignment spans rank {rank} < K={k}; components are degenerate")]
    DegenerateComponents {
        rank: usize,
        k: usize,
        assignment: Box<BinaryAssignment>,
    },

    #[error("epsilon bound undefined: denominator {denominator} is not positive")]
    BoundUndefined { denominator: f64 },

    #[error("evaluation data has zero energy")]
    ZeroSignal,

    #[error("invalid detection counts: {0}")]
    InvalidCounts(String),

    #[error("invalid threshold grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: line {line}: expected {expected} fields, found {found}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("{path}: line {line}: column '{column}' has non-numeric value '{value}'")]
    NonNumeric {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },

    #[error("{path}: line {line}: column '{column}' is empty")]
    MissingValue {
        path: PathBuf,
        line: u64,
        column: String,
    },

    #[error("{path}: label column '{column}' not found in header")]
    MissingLabelColumn { path: PathBuf, column: String },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serialization(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

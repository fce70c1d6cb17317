use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NonSquare { row: usize, len: usize, expected: usize },

    #[error("matrix is empty")]
    EmptyMatrix,

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("row {row} sums to {sum}, expected 1")]
    RowSumViolation { row: usize, sum: f64 },

    #[error("backward matrix is {backward}x{backward} but forward matrix is {forward}x{forward}")]
    DimensionMismatch { backward: usize, forward: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: u64, column: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid alpha {0}: must be finite and nonnegative")]
    InvalidAlpha(f64),

    #[error("oracle enumeration limited to n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },

    #[error("invalid LFP instance: {0}")]
    InvalidInstance(String),

    #[error("candidate violates the ratio constraints: {0}")]
    InfeasibleCandidate(String),

    #[error("privacy budget schedule is empty")]
    EmptySchedule,

    #[error("epsilon at step {index} is {value}; budgets must be positive and finite")]
    NonPositiveEpsilon { index: usize, value: f64 },

    #[error("no users supplied")]
    EmptyUserSet,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("index out of range: t={t}, j={j}, horizon {horizon}")]
    IndexOutOfRange { t: usize, j: usize, horizon: usize },

    #[error("trace invariant violated at t={t}: {message}")]
    TraceInvariant { t: usize, message: String },

    #[error("strongest correlation{}: leakage grows without bound for any positive budget", user.as_ref().map(|u| format!(" for user {u}")).unwrap_or_default())]
    StrongestCorrelation { user: Option<String> },

    #[error("invalid coefficients q={q}, d={d}: need 0 <= d <= q <= 1")]
    InvalidCoefficients { q: f64, d: f64 },

    #[error("maximizing row pair did not stabilize after {rounds} rounds")]
    StabilizationFailure { rounds: usize },

    #[error("alpha must be positive and finite, got {0}")]
    NonPositiveAlpha(f64),

    #[error("horizon {0} is too short; quantification-based allocation needs T >= 2")]
    HorizonTooShort(usize),

    #[error("bisection bracket [{lo}, {hi}] does not straddle a sign change ({f_lo}, {f_hi})")]
    BracketFailure { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("not a permutation of 0..{n}: {perm:?}")]
    InvalidPermutation { n: usize, perm: Vec<usize> },

    #[error("smoothing parameter must be positive and finite, got {0}")]
    NonPositiveS(f64),

    #[error("row for t={t} has {len} counts, expected {expected}")]
    InconsistentWidth { t: usize, len: usize, expected: usize },

    #[error("negative count {value} at t={t}, location {loc}")]
    NegativeCount { t: usize, loc: usize, value: i64 },

    #[error("schedule covers {schedule} steps but {needed} snapshots were supplied")]
    ScheduleTooShort { schedule: usize, needed: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
